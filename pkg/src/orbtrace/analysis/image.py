"""Image helpers shared by the measurements."""
from __future__ import annotations

import numpy as np

from ..imageio import decode_gamma

REC709 = np.array([0.2126, 0.7152, 0.0722])


def as_linear(image) -> np.ndarray:
    """Float linear image; 8-bit input is treated as gamma-2.2 encoded."""
    a = np.asarray(image)
    if a.dtype == np.uint8:
        return decode_gamma(a)
    return a.astype(np.float64, copy=False)


def luminance(image) -> np.ndarray:
    a = as_linear(image)
    if a.ndim == 2:
        return a
    if a.ndim == 3 and a.shape[2] == 3:
        return a @ REC709
    raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {a.shape}")


def radius_map(shape, circle) -> np.ndarray:
    """Distance of each pixel centre from the circle centre."""
    h, w = shape[:2]
    y, x = np.mgrid[0:h, 0:w]
    return np.hypot(x + 0.5 - circle.cx, y + 0.5 - circle.cy)


def disk_mask(shape, circle, inset_px: float = 0.0) -> np.ndarray:
    """Pixels whose centres lie inside the circle shrunk by ``inset_px``."""
    return radius_map(shape, circle) < circle.r - inset_px


def annulus_mask(shape, circle, r_lo: float, r_hi: float, pad_px: float = 0.0) -> np.ndarray:
    """Pixels with ``r_lo*R - pad <= r <= r_hi*R + pad``."""
    r = radius_map(shape, circle)
    return (r >= r_lo * circle.r - pad_px) & (r <= r_hi * circle.r + pad_px)


def highlight_mask(image, reference, circle, factor: float = 1.5) -> np.ndarray:
    """Specular highlights: in-disk pixels much brighter than the reference."""
    a = luminance(image)
    b = luminance(reference)
    return disk_mask(a.shape, circle) & (a > factor * b + 1e-3)


def interior_mask(image, reference, circle, band_px: float = 3.0) -> np.ndarray:
    """Orb interior minus a boundary band and specular highlights."""
    return disk_mask(luminance(image).shape, circle, band_px) & ~highlight_mask(image, reference, circle)


def image_rmse(a, b, mask=None) -> float:
    """Root-mean-square difference of linear radiance over ``mask``."""
    a = as_linear(a)
    b = as_linear(b)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if mask is None:
        mask = np.ones(a.shape[:2], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.shape[:2]:
        raise ValueError("mask shape does not match the images")
    if not mask.any():
        raise ValueError("empty mask")
    d = (a - b)[mask]
    return float(np.sqrt(np.mean(d ** 2)))


def segment_mask(shape, segments, half_width: float, circle=None, r_range=None) -> np.ndarray:
    """Pixels within ``half_width`` of any segment, optionally limited to
    ``r_range`` (in radii of ``circle``)."""
    h, w = shape[:2]
    y, x = np.mgrid[0:h, 0:w]
    px = x + 0.5
    py = y + 0.5
    out = np.zeros((h, w), dtype=bool)
    for p0, p1 in segments:
        p0 = np.asarray(p0, dtype=np.float64)
        d = np.asarray(p1, dtype=np.float64) - p0
        ll = float(d @ d)
        t = np.clip(((px - p0[0]) * d[0] + (py - p0[1]) * d[1]) / ll, 0.0, 1.0)
        out |= np.hypot(px - p0[0] - t * d[0], py - p0[1] - t * d[1]) <= half_width
    if r_range is not None:
        out &= annulus_mask(shape, circle, r_range[0], r_range[1])
    return out
