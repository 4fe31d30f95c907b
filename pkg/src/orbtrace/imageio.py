"""8-bit image files: binary PPM (P6) written by hand, PNG through Pillow."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

DEFAULT_GAMMA = 2.2


def encode_gamma(linear, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Linear radiance -> 8-bit codes, ``round(255 * clamp(x)^(1/gamma))``."""
    x = np.clip(np.nan_to_num(np.asarray(linear, dtype=np.float64), nan=0.0), 0.0, 1.0)
    return np.round(255.0 * x ** (1.0 / gamma)).astype(np.uint8)


def decode_gamma(codes, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    return (np.asarray(codes, dtype=np.float64) / 255.0) ** gamma


def ppm_bytes(rgb8: np.ndarray) -> bytes:
    rgb8 = np.ascontiguousarray(rgb8, dtype=np.uint8)
    if rgb8.ndim != 3 or rgb8.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) array")
    h, w, _ = rgb8.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb8.tobytes()


_PPM_HEADER = re.compile(rb"P6\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


def parse_ppm(data: bytes) -> np.ndarray:
    m = _PPM_HEADER.match(data)
    if not m:
        raise ValueError("not a binary PPM (P6) file")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError("only 8-bit PPM is supported")
    body = data[m.end():m.end() + w * h * 3]
    if len(body) != w * h * 3:
        raise ValueError("truncated PPM data")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy()


def write_rgb8(rgb8: np.ndarray, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "ppm":
        path.write_bytes(ppm_bytes(rgb8))
    elif fmt == "png":
        from PIL import Image

        Image.fromarray(np.ascontiguousarray(rgb8, dtype=np.uint8), "RGB").save(path, format="PNG")
    else:
        raise ValueError(f"unsupported image format {fmt!r} (use png or ppm)")


def read_rgb8(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P6":
        return parse_ppm(data)
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def load_texture(path, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Read an 8-bit PNG/PPM texture and linearise it."""
    return decode_gamma(read_rgb8(path), gamma)
