"""Dark-line cross sections.

A station is a short profile of log luminance sampled perpendicular to an
expected line. Working on log luminance and measuring darkness relative to a
percentile of the profile makes every result invariant under a global gamma
change or brightness scale: both turn log luminance into ``a * L + b``,
which scales all darkness weights by ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .image import luminance

BG_PERCENTILE = 90.0
SAMPLE_STEP = 0.5  # px between profile samples
NOISE_K = 5.0


def log_luminance(image) -> np.ndarray:
    lum = luminance(image)
    tiny = np.finfo(np.float64).tiny
    return np.log(np.maximum(lum, tiny))


@dataclass
class Stations:
    """Cross sections at positions ``origin + s * direction``."""

    s: np.ndarray          # along-line coordinate of each station (px)
    offset: np.ndarray     # darkness centroid, perpendicular offset (px); nan if none
    contrast: np.ndarray   # peak darkness (log units)
    noise: np.ndarray      # robust spread of the profile outside the line core
    points: np.ndarray     # (n, 2) measured track points, nan where undetected

    def detected(self, min_contrast: float = 0.0) -> np.ndarray:
        return (np.isfinite(self.offset) & (self.contrast > NOISE_K * self.noise)
                & (self.contrast > min_contrast) & (self.contrast > 0))


def sample_profiles(logl: np.ndarray, centers: np.ndarray, normal: np.ndarray,
                    half_width: float) -> tuple:
    """Bilinear samples along ``normal`` through each centre.

    Returns (t, profiles) with ``t`` the perpendicular offsets. Samples that
    fall outside the image are nan.
    """
    t = np.arange(-half_width, half_width + 1e-9, SAMPLE_STEP)
    pts = centers[:, None, :] + t[None, :, None] * normal[None, None, :]
    # pixel (i, j) covers [i, i+1): its centre is at i + 0.5
    coords = np.stack([pts[..., 1] - 0.5, pts[..., 0] - 0.5])
    h, w = logl.shape
    inside = ((coords[0] >= 0) & (coords[0] <= h - 1) & (coords[1] >= 0) & (coords[1] <= w - 1))
    vals = map_coordinates(logl, coords.reshape(2, -1), order=1, mode="nearest").reshape(pts.shape[:2])
    vals[~inside] = np.nan
    return t, vals


def centroid_profiles(t: np.ndarray, profiles: np.ndarray):
    """Subpixel darkness centroid, peak contrast and noise of each profile.

    Darkness is ``percentile90(profile) - profile``. The centroid uses the
    contiguous core around the darkest sample where darkness exceeds half
    its peak, weighted by the excess over that half level.
    """
    n = profiles.shape[0]
    offset = np.full(n, np.nan)
    contrast = np.zeros(n)
    noise = np.full(n, np.inf)
    for i in range(n):
        p = profiles[i]
        if not np.all(np.isfinite(p)):
            continue
        bg = np.percentile(p, BG_PERCENTILE)
        w = bg - p
        k = int(np.argmax(w))
        peak = w[k]
        if not peak > 0:
            contrast[i] = 0.0
            continue
        half = 0.5 * peak
        lo = k
        while lo > 0 and w[lo - 1] > half:
            lo -= 1
        hi = k
        while hi < len(w) - 1 and w[hi + 1] > half:
            hi += 1
        core = w[lo:hi + 1] - half
        offset[i] = float(np.dot(core, t[lo:hi + 1]) / core.sum())
        contrast[i] = peak
        # spread of the profile away from the core, as a noise scale
        # a core filling the window leaves nothing to compare against: noise stays inf
        margin = (hi - lo + 1) // 2
        left = w[:max(lo - margin, 0)]
        right = w[hi + 1 + margin:]
        d = np.concatenate([np.diff(left), np.diff(right)])
        if len(d) >= 4:
            noise[i] = 1.4826 * np.median(np.abs(d - np.median(d))) / np.sqrt(2.0)
    return offset, contrast, noise


def measure_stations(logl, origin, direction, s_values, half_width) -> Stations:
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    normal = np.array([-direction[1], direction[0]])
    s_values = np.asarray(s_values, dtype=np.float64)
    centers = np.asarray(origin, dtype=np.float64)[None, :] + s_values[:, None] * direction[None, :]
    t, prof = sample_profiles(logl, centers, normal, half_width)
    offset, contrast, noise = centroid_profiles(t, prof)
    points = centers + offset[:, None] * normal[None, :]
    return Stations(s_values, offset, contrast, noise, points)


def circle_line_params(origin, direction, circle, radius: float):
    """Along-line parameters where ``origin + s*direction`` meets the circle of
    the given radius about the circle centre (sorted), or None."""
    o = np.asarray(origin, dtype=np.float64) - (circle.cx, circle.cy)
    d = np.asarray(direction, dtype=np.float64)
    b = o @ d
    c = o @ o - radius * radius
    disc = b * b - c
    if disc <= 0:
        return None
    sq = np.sqrt(disc)
    return -b - sq, -b + sq


def fit_line(s: np.ndarray, offset: np.ndarray, degree: int = 1) -> np.ndarray:
    """Polynomial ``offset(s)`` coefficients, highest power first."""
    return np.polyfit(s, offset, degree)


def sagitta(s: np.ndarray, offset: np.ndarray) -> float:
    """Deviation from straightness: chord height of a quadratic fit over the span."""
    if len(s) < 5:
        return 0.0
    c2 = np.polyfit(s, offset, 2)[0]
    span = float(s.max() - s.min())
    return abs(c2) * span * span / 8.0
