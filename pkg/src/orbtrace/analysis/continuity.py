"""Continuity of dark lines across the orb silhouette.

For every place where an expected line crosses the silhouette, the line's
track is measured in an outside band and an inside band, both clear of a
thin boundary zone. The displacement combines two ways a line can break:

* ``lateral_gap``: offset between the inside track and the outside track,
  both extrapolated to the silhouette;
* ``interruption``: the stretch inside the band edge over which the track
  has faded below a tenth of its outside contrast.

``displacement = hypot(lateral_gap, interruption)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..scene.camera import Circle
from .tracks import circle_line_params, log_luminance, measure_stations, sagitta

OUTSIDE_BAND = (1.02, 1.15)
INSIDE_BAND = (0.85, 0.98)
DEFAULT_THRESHOLD_PX = 1.0
FADE_FRACTION = 0.1
CURVATURE_SAGITTA_PX = 0.5
MIN_STATIONS = 4


def window_half_width(radius_px: float) -> float:
    return max(4.0, 0.08 * radius_px)


@dataclass
class CrossingMeasurement:
    point: tuple                 # where the expected line meets the silhouette
    lateral_gap_px: float
    interruption_px: float
    displacement_px: float
    sagitta_outside_px: float
    sagitta_inside_px: float
    inside_found: bool
    status: str = "ok"
    message: str = ""


@dataclass
class LineContinuity:
    displacement_px: float
    lateral_gap_px: float
    interruption_px: float
    curvature_flag: bool
    connected: bool
    status: str
    crossings: list = field(default_factory=list)
    message: str = ""


@dataclass
class ContinuityReport:
    lines: list
    silhouette: Circle
    threshold_px: float

    @property
    def max_displacement(self) -> float:
        vals = [ln.displacement_px for ln in self.lines]
        return float(max(vals)) if vals else float("nan")

    def as_dict(self) -> dict:
        return {
            "silhouette": {"cx": self.silhouette.cx, "cy": self.silhouette.cy, "r": self.silhouette.r},
            "threshold_px": self.threshold_px,
            "lines": [{
                "displacement_px": ln.displacement_px, "lateral_gap_px": ln.lateral_gap_px,
                "interruption_px": ln.interruption_px, "curvature_flag": ln.curvature_flag,
                "connected": ln.connected, "status": ln.status, "message": ln.message,
            } for ln in self.lines],
        }


def _failed(point, msg) -> CrossingMeasurement:
    nan = float("nan")
    return CrossingMeasurement(point, nan, nan, nan, nan, nan, False, "failed", msg)


def _stations_between(s_a: float, s_b: float, step: float = 1.0) -> np.ndarray:
    n = int(math.floor(abs(s_b - s_a) / step)) + 1
    return s_a + np.sign(s_b - s_a) * step * np.arange(n)


def measure_crossing(logl, circle: Circle, p0, p1, s_cross: float) -> CrossingMeasurement:
    p0 = np.asarray(p0, dtype=np.float64)
    d = np.asarray(p1, dtype=np.float64) - p0
    seg_len = float(np.linalg.norm(d))
    d /= seg_len
    x = p0 + s_cross * d
    radial = x - (circle.cx, circle.cy)
    out_dir = d if np.dot(d, radial) > 0 else -d
    R = circle.r
    W = window_half_width(R)
    pt = (float(x[0]), float(x[1]))

    # outside band on the expected line, limited to the drawn segment
    lo = circle_line_params(x, out_dir, circle, OUTSIDE_BAND[0] * R)
    hi = circle_line_params(x, out_dir, circle, OUTSIDE_BAND[1] * R)
    if lo is None or hi is None:
        return _failed(pt, "line does not reach the outside band")
    s_lo, s_hi = lo[1], hi[1]
    along_end = seg_len - s_cross if np.dot(out_dir, d) > 0 else s_cross
    s_hi = min(s_hi, along_end)
    if s_hi - s_lo < MIN_STATIONS:
        return _failed(pt, "line ends before the outside band")
    outside = measure_stations(logl, x, out_dir, _stations_between(s_lo, s_hi), W)
    det = outside.detected()
    if det.sum() < MIN_STATIONS:
        return _failed(pt, "track not detectable outside the silhouette (contrast too low)")
    c_out = float(np.median(outside.contrast[det]))
    a1, a0 = np.polyfit(outside.s[det], outside.offset[det], 1)
    sag_out = sagitta(outside.s[det], outside.offset[det])

    # frame of the outside fit: origin on the fit line next to x, unit direction
    n = np.array([-out_dir[1], out_dir[0]])
    f_dir = out_dir + a1 * n
    f_dir /= np.linalg.norm(f_dir)
    f_org = x + a0 * n

    edge = circle_line_params(f_org, f_dir, circle, INSIDE_BAND[1] * R)
    deep = circle_line_params(f_org, f_dir, circle, INSIDE_BAND[0] * R)
    rim = circle_line_params(f_org, f_dir, circle, R)
    if edge is None or rim is None:
        return _failed(pt, "fitted track does not enter the inside band")
    s_edge = edge[1] if abs(edge[1]) < abs(edge[0]) else edge[0]
    s_rim = rim[1] if abs(rim[1]) < abs(rim[0]) else rim[0]
    if deep is not None:
        s_deep = deep[1] if abs(deep[1] - s_edge) < abs(deep[0] - s_edge) else deep[0]
    else:
        # the line never gets within 0.85 R of the centre: stop at its closest approach
        s_deep = 0.5 * (edge[0] + edge[1])
    s_in = _stations_between(s_edge, s_deep)
    inside = measure_stations(logl, f_org, f_dir, s_in, W)
    tau = FADE_FRACTION * c_out
    det_in = inside.detected(min_contrast=tau)
    band_len = abs(s_deep - s_edge)

    first = None
    for k in range(len(s_in) - 1):
        if det_in[k] and det_in[k + 1]:
            first = k
            break
    if first is None:
        interruption = band_len
        return CrossingMeasurement(pt, float("nan"), interruption, interruption, sag_out, float("nan"),
                                   False, "ok", "track lost inside the silhouette")
    if first == 0:
        interruption = 0.0
    else:
        c0, c1 = inside.contrast[first - 1], inside.contrast[first]
        frac = 1.0 if c1 <= c0 else float(np.clip((tau - c0) / (c1 - c0), 0.0, 1.0))
        interruption = abs(s_in[first - 1] - s_edge) + frac * abs(s_in[first] - s_in[first - 1])

    keep = det_in.copy()
    keep[:first] = False
    if keep.sum() < MIN_STATIONS:
        interruption = band_len
        return CrossingMeasurement(pt, float("nan"), interruption, interruption, sag_out, float("nan"),
                                   False, "ok", "too few inside stations")
    b1, b0 = np.polyfit(inside.s[keep], inside.offset[keep], 1)
    gap = abs(b0 + b1 * s_rim)
    sag_in = sagitta(inside.s[keep], inside.offset[keep])
    return CrossingMeasurement(pt, float(gap), float(interruption), float(math.hypot(gap, interruption)),
                               float(sag_out), float(sag_in), True)


def measure_line_continuity(image, silhouette: Circle, expected_lines,
                            threshold_px: float = DEFAULT_THRESHOLD_PX) -> ContinuityReport:
    """Measure each expected line where it crosses the silhouette.

    ``expected_lines`` holds image-space segments ``(p0, p1)`` tracing where
    each line lies outside the orb. A segment crossing the silhouette twice
    is measured at both crossings and reports the larger displacement.
    """
    logl = log_luminance(image)
    h, w = logl.shape
    c = silhouette
    if not (c.r > 0 and 0 <= c.cx - c.r and c.cx + c.r <= w and 0 <= c.cy - c.r and c.cy + c.r <= h):
        raise ValueError("silhouette circle must lie inside the image")
    lines = []
    for seg in expected_lines:
        p0 = np.asarray(seg[0], dtype=np.float64)
        p1 = np.asarray(seg[1], dtype=np.float64)
        length = float(np.linalg.norm(p1 - p0))
        d = (p1 - p0) / length
        hits = circle_line_params(p0, d, c, c.r)
        crossings = [s for s in (hits or ()) if 0.0 <= s <= length]
        if not crossings:
            nan = float("nan")
            lines.append(LineContinuity(nan, nan, nan, False, False, "failed", [],
                                        "line does not cross the silhouette"))
            continue
        meas = [measure_crossing(logl, c, p0, p1, s) for s in crossings]
        if any(m.status != "ok" for m in meas):
            nan = float("nan")
            msg = "; ".join(m.message for m in meas if m.status != "ok")
            lines.append(LineContinuity(nan, nan, nan, False, False, "failed", meas, msg))
            continue
        worst = max(meas, key=lambda m: m.displacement_px)
        curved = any(max(m.sagitta_outside_px, np.nan_to_num(m.sagitta_inside_px)) > CURVATURE_SAGITTA_PX
                     for m in meas)
        lines.append(LineContinuity(worst.displacement_px, worst.lateral_gap_px, worst.interruption_px,
                                    bool(curved), bool(worst.displacement_px < threshold_px), "ok", meas,
                                    worst.message))
    return ContinuityReport(lines, c, threshold_px)
