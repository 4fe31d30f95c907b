"""Linear RGB accumulation buffer and image export."""
from __future__ import annotations

import numpy as np

from ..imageio import DEFAULT_GAMMA, encode_gamma, write_rgb8


class Film:
    """Per-pixel radiance sums and sample counts.

    Pixels that were never sampled (masked renders) have count 0 and read
    back as ``fill`` from :meth:`mean`.
    """

    def __init__(self, width: int, height: int, gamma: float = DEFAULT_GAMMA):
        self.width = int(width)
        self.height = int(height)
        self.gamma = float(gamma)
        self.sum = np.zeros((self.height, self.width, 3), dtype=np.float64)
        self.count = np.zeros((self.height, self.width), dtype=np.int64)

    @property
    def shape(self):
        return self.height, self.width

    def add(self, xs, ys, radiance, samples: int) -> None:
        radiance = np.asarray(radiance, dtype=np.float64)
        if not np.all(np.isfinite(radiance)) or np.any(radiance < 0):
            raise ValueError("film accumulation must be finite and non-negative")
        self.sum[ys, xs] += radiance
        self.count[ys, xs] += samples

    def merge(self, other: "Film") -> "Film":
        """Add another film's samples (e.g. a second pass over other pixels)."""
        if other.shape != self.shape:
            raise ValueError("film sizes differ")
        self.sum += other.sum
        self.count += other.count
        return self

    @property
    def rendered(self) -> np.ndarray:
        return self.count > 0

    def mean(self, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.sum.shape, fill, dtype=np.float64)
        m = self.rendered
        out[m] = self.sum[m] / self.count[m][:, None]
        return out

    def to_rgb8(self) -> np.ndarray:
        return encode_gamma(self.mean(), self.gamma)


def write_image(film, path, format: str | None = None) -> None:
    """Write a film (or a linear (H, W, 3) array) as 8-bit gamma-encoded PNG or PPM."""
    if isinstance(film, Film):
        rgb8 = film.to_rgb8()
    else:
        rgb8 = encode_gamma(film, DEFAULT_GAMMA)
    write_rgb8(rgb8, path, format)
