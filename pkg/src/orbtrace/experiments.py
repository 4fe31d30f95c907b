"""Canned experiments: scene generation, rendering, measurement and a pass/fail predicate.

Every experiment renders at 1024 x 1024 by default. Pixels the measurement
reads are traced at the full sample count; the rest of the frame gets a
cheap preview pass so the written images are complete. ``fast`` mode
renders whole 256 x 256 frames at 16 samples per pixel, and pixel
distances are then reported scaled to the 1024-pixel frame.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .analysis import (detect_inversion, fit_fold_convergence, fold_edge_samples, image_rmse,
                       interior_mask, measure_line_continuity)
from .analysis.contours import detect_double_contour
from .analysis.continuity import DEFAULT_THRESHOLD_PX, window_half_width
from .analysis.image import disk_mask, segment_mask
from .optics import CalciteSpec
from .render import Film, render, write_image
from .scene.camera import Camera, Circle
from .scene.config import OrbSpec, SceneConfig, orb_center_world, replace_camera, replace_orb
from .scene.generators import make_salvator_scene, make_three_lines_scene, projected_fold_segments, \
    projected_stroke_segments

REFERENCE_WIDTH = 1024
SWEEP_THICKNESS_MM = (0.5, 1.3, 2.0, 2.6, 3.0)
EXTRA_THICKNESS_MM = (2.7,)  # also reported, not part of the monotonicity check
HOLLOW_MM = 1.3
THICK_MM = 2.6
SHIFT_CM = 1.0

EXPERIMENT_IDS = ("solid_vs_hollow", "three_lines", "three_lines_bent", "fold_convergence",
                  "thickness_sweep", "shift_1cm", "calcite_birefringence")


@dataclass
class ExperimentOptions:
    fast: bool = False
    spp: Optional[int] = None
    preview_spp: Optional[int] = None
    seed: int = 0
    workers: Optional[int] = None
    progress: bool = False

    @property
    def resolution(self) -> int:
        return 256 if self.fast else REFERENCE_WIDTH

    @property
    def samples(self) -> int:
        return self.spp or (16 if self.fast else 256)

    @property
    def preview(self) -> int:
        return self.preview_spp or (self.samples if self.fast else 4)


@dataclass
class ExperimentResult:
    id: str
    passed: bool
    predicate: str
    measurements: dict
    images: dict = field(default_factory=dict)   # name -> Film
    tables: dict = field(default_factory=dict)   # name -> (header, rows)
    failure: str = ""

    def summary(self) -> str:
        lines = [f"experiment {self.id}: {'PASS' if self.passed else 'FAIL'}",
                 f"predicate: {self.predicate}"]
        for k, v in self.measurements.items():
            lines.append(f"  {k} = {_fmt(v)}")
        if self.failure:
            lines.append(f"failing measurement: {self.failure}")
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


# --------------------------------------------------------------------------
# rendering helpers


def sized(config: SceneConfig, opts: ExperimentOptions) -> SceneConfig:
    n = opts.resolution
    return replace_camera(config, width=n, height=n)


def silhouette(config: SceneConfig) -> Circle:
    return Camera(config.camera).sphere_silhouette(orb_center_world(config), config.orb.radius)


def render_focus(config: SceneConfig, opts: ExperimentOptions, focus=None) -> Film:
    """Full-quality render of ``focus`` pixels and a preview pass elsewhere."""
    settings = replace(config.render, samples_per_pixel=opts.samples, seed=opts.seed)
    if focus is None or opts.preview >= opts.samples:
        return render(config, settings, workers=opts.workers, progress=opts.progress)
    film = render(config, settings, mask=focus, workers=opts.workers, progress=opts.progress)
    if not focus.all():
        rest = render(config, replace(settings, samples_per_pixel=opts.preview), mask=~focus,
                      workers=opts.workers, progress=opts.progress)
        film.merge(rest)
    return film


def _scale(opts: ExperimentOptions) -> float:
    return REFERENCE_WIDTH / opts.resolution


def _continuity_focus(shape, segments, circle: Circle) -> np.ndarray:
    pad = window_half_width(circle.r) + 6
    return segment_mask(shape, segments, pad, circle, (0.8, 1.2))


def fold_continuity(config: SceneConfig, opts: ExperimentOptions, tag: str, images: dict):
    """Render ``config`` and measure every non-exempt fold at the silhouette."""
    config = sized(config, opts)
    circle = silhouette(config)
    segs = [s for s, f in zip(projected_fold_segments(config), config.relief.folds) if not f.exempt]
    shape = (config.camera.height, config.camera.width)
    film = render_focus(config, opts, _continuity_focus(shape, segs, circle))
    images[tag] = film
    report = measure_line_continuity(film.mean(), circle, segs, DEFAULT_THRESHOLD_PX / _scale(opts))
    return report, _scale(opts)


# --------------------------------------------------------------------------
# experiments


def solid_vs_hollow(opts: ExperimentOptions) -> ExperimentResult:
    base = sized(make_salvator_scene(), opts)
    circle = silhouette(base)
    shape = (base.camera.height, base.camera.width)
    focus = disk_mask(shape, circle, -4.0)
    configs = {
        "no_orb": replace_orb(base, present=False),
        "solid": replace_orb(base, thickness=base.orb.radius),
        "hollow_1.3mm": replace_orb(base, thickness=HOLLOW_MM / 10.0),
    }
    films = {k: render_focus(c, opts, focus) for k, c in configs.items()}
    ref = films["no_orb"].mean()
    m = {}
    for k in ("solid", "hollow_1.3mm"):
        img = films[k].mean()
        inv = detect_inversion(img, ref, circle)
        m[f"inversion_{k}"] = inv.score
        m[f"rmse_{k}"] = image_rmse(img, ref, interior_mask(img, ref, circle))
    m["rmse_ratio"] = m["rmse_solid"] / m["rmse_hollow_1.3mm"] if m["rmse_hollow_1.3mm"] > 0 else math.inf
    ok = m["inversion_solid"] > 0 > m["inversion_hollow_1.3mm"]
    fail = "" if ok else f"inversion solid={m['inversion_solid']:.3f}, hollow={m['inversion_hollow_1.3mm']:.3f}"
    return ExperimentResult("solid_vs_hollow", ok, "inversion(solid) > 0 > inversion(hollow 1.3 mm)",
                            m, films, failure=fail)


def _three_lines(opts: ExperimentOptions, bend: bool):
    balls = {
        "hollow_1.3mm": OrbSpec(thickness=HOLLOW_MM / 10.0),
        "solid": OrbSpec(thickness=OrbSpec().radius),
    }
    images, reports, scale = {}, {}, _scale(opts)
    for name, ball in balls.items():
        config = sized(make_three_lines_scene(ball, bend_middle=bend), opts)
        circle = silhouette(config)
        segs = projected_stroke_segments(config)
        shape = (config.camera.height, config.camera.width)
        film = render_focus(config, opts, _continuity_focus(shape, segs, circle))
        images[name] = film
        reports[name] = measure_line_continuity(film.mean(), circle, segs, DEFAULT_THRESHOLD_PX / scale)
    return images, reports, scale


def _line_values(report, scale):
    return ([ln.displacement_px * scale for ln in report.lines], [ln.curvature_flag for ln in report.lines])


def three_lines(opts: ExperimentOptions) -> ExperimentResult:
    images, reports, scale = _three_lines(opts, bend=False)
    m = {}
    for name, rep in reports.items():
        disp, curved = _line_values(rep, scale)
        m[f"{name}_displacement_px"] = disp
        m[f"{name}_curved"] = curved
    hd, hc = m["hollow_1.3mm_displacement_px"], m["hollow_1.3mm_curved"]
    sd = m["solid_displacement_px"]
    middle_ok = hd[1] < DEFAULT_THRESHOLD_PX and sd[1] < DEFAULT_THRESHOLD_PX
    outer_ok = all(hd[i] >= 2.0 and hc[i] for i in (0, 2))
    ok = bool(middle_ok and outer_ok)
    fail = "" if ok else (f"middle hollow={hd[1]:.3f} solid={sd[1]:.3f}; "
                          f"outer hollow={_fmt([hd[0], hd[2]])} curved={[hc[0], hc[2]]}")
    return ExperimentResult("three_lines", ok,
                            "middle line < 1 px for both balls; hollow outer lines >= 2 px and curved",
                            m, images, failure=fail)


def three_lines_bent(opts: ExperimentOptions) -> ExperimentResult:
    images, reports, scale = _three_lines(opts, bend=True)
    m = {}
    for name, rep in reports.items():
        disp, curved = _line_values(rep, scale)
        m[f"{name}_middle_displacement_px"] = disp[1]
    d = m["hollow_1.3mm_middle_displacement_px"]
    ok = bool(d >= 2.0)
    return ExperimentResult("three_lines_bent", ok, "kinked middle line >= 2 px (hollow ball)", m, images,
                            failure="" if ok else f"middle displacement {d:.3f} px")


def fold_convergence(opts: ExperimentOptions) -> ExperimentResult:
    config = sized(make_salvator_scene({"orb.thickness_mm": HOLLOW_MM}), opts)
    circle = silhouette(config)
    segs = projected_fold_segments(config)
    shape = (config.camera.height, config.camera.width)
    focus = segment_mask(shape, segs, 16.0, circle, (1.05, 1.85))
    film = render_focus(config, opts, focus)
    samples = fold_edge_samples(film.mean(), circle, segs)
    fit = fit_fold_convergence(samples)
    centre = np.array([circle.cx, circle.cy])
    err = float(np.linalg.norm(fit.point - centre)) * _scale(opts)
    exempt = [i for i, f in enumerate(config.relief.folds) if f.exempt]
    m = {"convergence_px": fit.point.tolist(), "orb_centre_px": centre.tolist(),
         "distance_px": err, "rms_residual_px": fit.rms_residual * _scale(opts),
         "outliers": list(fit.outliers), "exempt_folds": exempt}
    ok = bool(err < 1.0 and set(exempt) <= set(fit.outliers))
    return ExperimentResult("fold_convergence", ok,
                            "convergence point within 1 px of the projected orb centre; exempt fold flagged",
                            m, {"hollow_1.3mm": film}, failure="" if ok else f"distance {err:.3f} px, "
                            f"outliers {fit.outliers} vs exempt {exempt}")


def thickness_sweep(opts: ExperimentOptions) -> ExperimentResult:
    images, rows, m = {}, [], {}
    for t in sorted(SWEEP_THICKNESS_MM + EXTRA_THICKNESS_MM):
        rep, scale = fold_continuity(make_salvator_scene({"orb.thickness_mm": t}), opts, f"{t}mm", images)
        per = [ln.displacement_px * scale for ln in rep.lines]
        rows.append([t, rep.max_displacement * scale] + per)
        m[f"max_displacement_{t}mm"] = rep.max_displacement * scale
    canon = [m[f"max_displacement_{t}mm"] for t in SWEEP_THICKNESS_MM]
    monotone = all(b >= a for a, b in zip(canon, canon[1:]))
    thin = m[f"max_displacement_{HOLLOW_MM}mm"]
    thick = m[f"max_displacement_{THICK_MM}mm"]
    ok = bool(monotone and thin < DEFAULT_THRESHOLD_PX <= thick)
    m["monotone"] = monotone
    n = len(rows[0]) - 2
    header = ["thickness_mm", "max_displacement_px"] + [f"fold{i}_px" for i in range(n)]
    return ExperimentResult("thickness_sweep", ok,
                            "max fold displacement monotone over 0.5-3.0 mm, < 1 px at 1.3 mm, >= 1 px at 2.6 mm",
                            m, images, {"thickness_sweep": (header, rows)},
                            failure="" if ok else f"1.3 mm: {thin:.3f} px, 2.6 mm: {thick:.3f} px, "
                            f"monotone={monotone}")


def shift_1cm(opts: ExperimentOptions) -> ExperimentResult:
    images = {}
    base, scale = fold_continuity(make_salvator_scene({"orb.thickness_mm": HOLLOW_MM}), opts, "aligned", images)
    moved, _ = fold_continuity(make_salvator_scene({"orb.thickness_mm": HOLLOW_MM,
                                                    "orb.lateral_shift_cm": SHIFT_CM}), opts, "shifted", images)
    a, b = base.max_displacement * scale, moved.max_displacement * scale
    ok = bool(a < DEFAULT_THRESHOLD_PX and b >= 2.0)
    return ExperimentResult("shift_1cm", ok, "max fold displacement < 1 px aligned and >= 2 px after a 1 cm shift",
                            {"aligned_max_displacement_px": a, "shifted_max_displacement_px": b}, images,
                            failure="" if ok else f"aligned {a:.3f} px, shifted {b:.3f} px")


def calcite_birefringence(opts: ExperimentOptions) -> ExperimentResult:
    calcite = OrbSpec(thickness=OrbSpec().radius, material=CalciteSpec(tint=OrbSpec().material.tint))
    base = sized(make_salvator_scene(), opts)
    circle = silhouette(base)
    shape = (base.camera.height, base.camera.width)
    focus = disk_mask(shape, circle, -4.0)
    ref = render_focus(replace_orb(base, present=False), opts, focus)
    avg = render_focus(replace(base, orb=calcite), opts, focus)
    inv = detect_inversion(avg.mean(), ref.mean(), circle)

    lines = sized(make_three_lines_scene(calcite), opts)
    lc = silhouette(lines)
    lines_film = render_focus(lines, opts, disk_mask(shape, lc, -4.0))
    dc = detect_double_contour(lines_film.mean(), lc, projected_stroke_segments(lines))
    m = {"inversion_score": inv.score, "double_contour": dc.detected,
         "tracks_per_side": list(dc.tracks_per_side), "lines_per_side": list(dc.lines_per_side),
         "track_offsets_px": (dc.tracks.offsets * _scale(opts)).tolist()}
    ok = bool(inv.score > 0 and dc.detected)
    return ExperimentResult("calcite_birefringence", ok, "inversion score > 0 and every line doubled",
                            m, {"no_orb": ref, "calcite": avg, "three_lines_calcite": lines_film},
                            failure="" if ok else f"inversion {inv.score:.3f}, double contour {dc.detected}")


EXPERIMENTS: dict = {
    "solid_vs_hollow": solid_vs_hollow,
    "three_lines": three_lines,
    "three_lines_bent": three_lines_bent,
    "fold_convergence": fold_convergence,
    "thickness_sweep": thickness_sweep,
    "shift_1cm": shift_1cm,
    "calcite_birefringence": calcite_birefringence,
}


def run_experiment(exp_id: str, opts: Optional[ExperimentOptions] = None) -> ExperimentResult:
    if exp_id not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {exp_id!r}; choose from {', '.join(EXPERIMENT_IDS)}")
    return EXPERIMENTS[exp_id](opts or ExperimentOptions())


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_results(result: ExperimentResult, out_dir) -> list:
    """Write images (PNG), the report (text and JSON) and tables (CSV) under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, film in result.images.items():
        p = out / f"{result.id}_{name}.png"
        write_image(film, p)
        written.append(p)
    for name, (header, rows) in result.tables.items():
        p = out / f"{name}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        written.append(p)
    p = out / f"{result.id}_report.txt"
    p.write_text(result.summary() + "\n")
    written.append(p)
    p = out / f"{result.id}_report.json"
    p.write_text(json.dumps({"id": result.id, "passed": result.passed, "predicate": result.predicate,
                             "failure": result.failure,
                             "measurements": {k: _jsonable(v) for k, v in result.measurements.items()}},
                            indent=2) + "\n")
    written.append(p)
    return written


# --------------------------------------------------------------------------
# metrics for parameter sweeps


def _metric_fold_displacement(config: SceneConfig, image, reference: Callable) -> float:
    circle = silhouette(config)
    segs = [s for s, f in zip(projected_fold_segments(config), config.relief.folds) if not f.exempt]
    return measure_line_continuity(image, circle, segs).max_displacement


def _metric_inversion(config: SceneConfig, image, reference: Callable) -> float:
    return detect_inversion(image, reference(), silhouette(config)).score


def _metric_rmse(config: SceneConfig, image, reference: Callable) -> float:
    ref = reference()
    return image_rmse(image, ref, interior_mask(image, ref, silhouette(config)))


METRICS = {
    "fold_displacement_px": _metric_fold_displacement,
    "inversion_score": _metric_inversion,
    "interior_rmse": _metric_rmse,
}


def evaluate_metric(metric: str, config: SceneConfig, image, reference: Callable) -> float:
    """``reference`` is called (lazily) for metrics that need the orb-free image."""
    if metric not in METRICS:
        raise KeyError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    return float(METRICS[metric](config, image, reference))
