"""Least-squares convergence point of straight fold edges."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..scene.camera import Circle
from .tracks import circle_line_params, log_luminance, measure_stations

MIN_SAMPLES = 10
OUTLIER_FACTOR = 3.0
OUTLIER_FLOOR_PX = 1.0
EDGE_BAND = (1.1, 1.8)


class NoConvergenceError(ValueError):
    """The fold lines are (nearly) parallel."""


@dataclass
class ConvergenceFit:
    point: np.ndarray          # (2,) px
    lines: list                # per fold: (point on line, unit direction)
    residuals: np.ndarray      # distance of ``point`` from each fold line
    rms_residual: float        # over inlier folds
    outliers: list             # fold indices


def tls_line(points) -> tuple:
    """Total-least-squares line: (centroid, unit direction)."""
    p = np.asarray(points, dtype=np.float64)
    c = p.mean(axis=0)
    _, _, vt = np.linalg.svd(p - c, full_matrices=False)
    return c, vt[0]


def nearest_point(lines) -> np.ndarray:
    """Point minimising the summed squared distance to the lines."""
    A = np.zeros((2, 2))
    b = np.zeros(2)
    for c, d in lines:
        P = np.eye(2) - np.outer(d, d)
        A += P
        b += P @ c
    # parallel lines make A rank-deficient
    w = np.linalg.eigvalsh(A)
    if w[0] < 1e-9 * max(w[1], 1e-300):
        raise NoConvergenceError("fold lines are parallel; no convergence point")
    return np.linalg.solve(A, b)


def _distances(point, lines) -> np.ndarray:
    out = []
    for c, d in lines:
        r = point - c
        out.append(abs(r[0] * d[1] - r[1] * d[0]))
    return np.array(out)


def _robust_start(lines) -> np.ndarray:
    candidates = [nearest_point(lines)]
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            try:
                candidates.append(nearest_point([lines[i], lines[j]]))
            except NoConvergenceError:
                pass
    return min(candidates, key=lambda p: float(np.median(_distances(p, lines))))


def fit_fold_convergence(samples, outlier_factor: float = OUTLIER_FACTOR,
                         outlier_floor_px: float = OUTLIER_FLOOR_PX) -> ConvergenceFit:
    """Fit a line to each fold's edge samples and intersect them.

    The iteration starts from the pairwise intersection (or the all-fold
    least-squares point) with the smallest median distance to the folds, so
    a single stray fold cannot drag the start. Folds farther from the point
    than ``max(outlier_factor * median, outlier_floor_px)`` are flagged as
    outliers and the point is refitted without them until the flagged set
    stops changing.
    """
    samples = [np.asarray(s, dtype=np.float64) for s in samples]
    if len(samples) < 2:
        raise ValueError("need at least two folds")
    for i, s in enumerate(samples):
        if s.ndim != 2 or s.shape[1] != 2 or len(s) < MIN_SAMPLES:
            raise ValueError(f"fold {i} needs at least {MIN_SAMPLES} (x, y) samples")
    lines = [tls_line(s) for s in samples]
    inliers = list(range(len(lines)))
    point = _robust_start(lines)
    for _ in range(len(lines)):
        res = _distances(point, lines)
        limit = max(outlier_factor * float(np.median(res[inliers])), outlier_floor_px)
        new = [i for i in range(len(lines)) if res[i] <= limit]
        if len(new) < 2 or new == inliers:
            break
        inliers = new
        point = nearest_point([lines[i] for i in inliers])
    res = _distances(point, lines)
    outliers = [i for i in range(len(lines)) if i not in inliers]
    rms = float(np.sqrt(np.mean(res[inliers] ** 2)))
    return ConvergenceFit(point, lines, res, rms, outliers)


def fold_edge_samples(image, silhouette: Circle, segments, band=EDGE_BAND, window_px: Optional[float] = None):
    """Measured track points of each fold outside the orb.

    Stations run every pixel along each expected segment where its distance
    from the silhouette centre lies in ``band`` (in silhouette radii). The
    cross-section half width defaults to the continuity window.
    """
    if window_px is None:
        from .continuity import window_half_width

        window_px = window_half_width(silhouette.r)
    logl = log_luminance(image)
    out = []
    for p0, p1 in segments:
        p0 = np.asarray(p0, dtype=np.float64)
        d = np.asarray(p1, dtype=np.float64) - p0
        length = float(np.linalg.norm(d))
        d /= length
        lo = circle_line_params(p0, d, silhouette, band[0] * silhouette.r)
        hi = circle_line_params(p0, d, silhouette, band[1] * silhouette.r)
        if hi is None:
            out.append(np.zeros((0, 2)))
            continue
        s_a = max(lo[1] if lo is not None else hi[0], 0.0)
        s_b = min(hi[1], length)
        s = np.arange(s_a, s_b, 1.0)
        st = measure_stations(logl, p0, d, s, window_px)
        out.append(st.points[st.detected()])
    return out
