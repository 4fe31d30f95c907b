"""Is the background seen through the orb upside down?"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from ..scene.camera import Circle
from .image import luminance

RADIAL_BAND = (0.2, 0.85)
N_ANGLES = 360
N_RADII = 48
TEXTURE_FLOOR = 1e-3  # minimum coefficient of variation of the background profile


@dataclass
class InversionResult:
    score: float            # in [-1, 1]; nan when indeterminate
    corr_upright: float
    corr_inverted: float
    status: str             # "ok" or "indeterminate"


def angular_profile(image, circle: Circle, band=RADIAL_BAND, n_angles: int = N_ANGLES,
                    n_radii: int = N_RADII) -> np.ndarray:
    """Mean luminance over ``band`` radii for each of ``n_angles`` directions."""
    lum = luminance(image)
    phi = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    r = circle.r * np.linspace(band[0], band[1], n_radii)
    x = circle.cx + r[None, :] * np.cos(phi)[:, None]
    y = circle.cy + r[None, :] * np.sin(phi)[:, None]
    vals = map_coordinates(lum, [y.ravel() - 0.5, x.ravel() - 0.5], order=1, mode="nearest")
    return vals.reshape(n_angles, n_radii).mean(axis=1)


def _corr(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a * a).sum() * (b * b).sum())
    return float((a * b).sum() / den) if den > 0 else 0.0


def detect_inversion(image_with_orb, image_without_orb, silhouette: Circle) -> InversionResult:
    """Compare the in-orb angular profile with the background upright and point-reflected.

    ``score = corr(inside, background rotated by 180 deg) - corr(inside,
    background)``, clipped to [-1, 1]. Positive means the orb shows the
    background inverted.
    """
    a = luminance(image_with_orb)
    b = luminance(image_without_orb)
    if a.shape != b.shape:
        raise ValueError("images must have the same size")
    inside = angular_profile(a, silhouette)
    bg = angular_profile(b, silhouette)
    mean = abs(bg.mean())
    if not bg.std() > TEXTURE_FLOOR * max(mean, 1e-12):
        nan = float("nan")
        return InversionResult(nan, nan, nan, "indeterminate")
    up = _corr(inside, bg)
    inv = _corr(inside, np.roll(bg, N_ANGLES // 2))
    return InversionResult(float(np.clip(inv - up, -1.0, 1.0)), up, inv, "ok")
