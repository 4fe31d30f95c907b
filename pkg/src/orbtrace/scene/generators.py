"""Procedural scenes: the default orb-and-relief composition, the three-lines
stage, and the eye/orb/convergence alignment."""
from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional

import numpy as np

from .camera import Camera
from .config import (HandSpec, LightRig, OrbSpec, ReliefSpec, SceneConfig, StrokeSpec,
                     orb_center_world, relief_plane_z)

THREE_LINES_SPACING_CM = 3.4
THREE_LINES_KINK_DEG = 10.0
THREE_LINES_KINK_RADIUS = 2.0  # kink distance below the centre, in silhouette radii


class AlignmentError(ValueError):
    pass


def make_salvator_scene(overrides=None) -> SceneConfig:
    """Default composition, optionally modified by ``{dotted.key: value}`` overrides.

    Keys use the scene-file spelling, e.g. ``{"orb.thickness_mm": 2.6}`` or
    ``{"orb.thickness": "solid", "orb.lateral_shift_cm": 1.0}``.
    """
    config = SceneConfig()
    if overrides:
        from .format import apply_overrides

        config = apply_overrides(config, overrides)
    return config


def relief_silhouette_radius(config: SceneConfig) -> float:
    """Radius (cm) of the orb's shadow cone from the eye where it meets the relief.

    Exact for an orb on the optical axis, which is the case for both generated
    scenes.
    """
    eye = np.asarray(config.camera.position)
    c = orb_center_world(config)
    dist = np.linalg.norm(c - eye)
    depth = eye[2] - relief_plane_z(config)
    return float(depth * math.tan(math.asin(config.orb.radius / dist)))


def projected_orb_center_on_relief(config: SceneConfig) -> np.ndarray:
    """Relief (u, v) hit by the line from the eye through the orb centre."""
    eye = np.asarray(config.camera.position)
    c = orb_center_world(config)
    d = c - eye
    if abs(d[2]) < 1e-12:
        raise AlignmentError("eye and orb centre lie in a plane parallel to the relief")
    s = (relief_plane_z(config) - eye[2]) / d[2]
    return (eye + s * d)[:2]


def make_three_lines_scene(ball: Optional[OrbSpec] = None, bend_middle: bool = False,
                           line_spacing: float = THREE_LINES_SPACING_CM,
                           kink_radius: float = THREE_LINES_KINK_RADIUS) -> SceneConfig:
    """Three parallel dark lines on a light plane, viewed head-on through a ball.

    The middle line passes through the ball's projected centre. With
    ``bend_middle`` it turns ``THREE_LINES_KINK_DEG`` to the right at a point
    ``kink_radius`` silhouette radii below the centre, so the part that crosses
    the ball no longer passes through its centre.
    """
    if not line_spacing > 0:
        raise ValueError("line_spacing must be positive")
    if not kink_radius > 1.0:
        raise ValueError("the kink must lie outside the silhouette (kink_radius > 1)")
    ball = ball or OrbSpec()
    base = SceneConfig(
        orb=ball,
        lights=LightRig(main_directions=((0.0, 0.0, 1.0),)),
        relief=ReliefSpec(albedo=(0.85, 0.85, 0.85), folds=(), bands=(), convergence=None),
        hand=HandSpec(enabled=False),
    )
    cu, cv = projected_orb_center_on_relief(base)
    half = 40.0
    strokes = []
    for k in (-1, 0, 1):
        u = cu + k * line_spacing
        if k == 0 and bend_middle:
            kv = cv - kink_radius * relief_silhouette_radius(base)
            a = math.radians(THREE_LINES_KINK_DEG)
            end = (cu + 2 * half * math.sin(a), kv + 2 * half * math.cos(a))
            strokes.append(StrokeSpec(points=((u, cv - half), (u, kv), end)))
        else:
            strokes.append(StrokeSpec(points=((u, cv - half), (u, cv + half))))
    return replace(base, relief=replace(base.relief, strokes=tuple(strokes)))


def align_view(config: SceneConfig, convergence=None) -> SceneConfig:
    """Move the camera the least distance that puts it on the line through the
    fold convergence point and the orb centre.

    The look-at point is kept. A camera already on that line (to 1e-12 cm) is
    returned unchanged, which makes the operation idempotent.
    """
    conv = config.relief.convergence if convergence is None else convergence
    if conv is None:
        raise AlignmentError("scene has no fold convergence point")
    conv = np.asarray(conv, dtype=np.float64)
    if conv.shape != (2,) or not np.all(np.isfinite(conv)):
        raise AlignmentError(f"convergence point must be finite, got {conv!r}")
    p = np.array([conv[0], conv[1], relief_plane_z(config)])
    c = orb_center_world(config)
    axis = c - p
    length = np.linalg.norm(axis)
    if length < 1e-9:
        raise AlignmentError("convergence point coincides with the orb centre")
    axis /= length
    eye = np.asarray(config.camera.position, dtype=np.float64)
    s = float(np.dot(eye - p, axis))
    new_eye = p + s * axis
    if np.linalg.norm(new_eye - eye) <= 1e-12:
        return config
    if s <= length + config.orb.radius:
        raise AlignmentError("aligned eye would sit inside or behind the orb")
    try:
        camera = replace(config.camera, position=tuple(float(x) for x in new_eye))
        px = Camera(camera).project(c)
    except ValueError as exc:
        raise AlignmentError(f"alignment impossible: {exc}") from None
    if not (0 <= px[0] <= camera.width and 0 <= px[1] <= camera.height):
        raise AlignmentError("orb centre leaves the field of view after alignment")
    return replace(config, camera=camera)


def projected_fold_segments(config: SceneConfig):
    """Image-space ``(p0, p1)`` of each fold edge from its start to its end.

    The relief is a plane, so each fold projects to a straight segment.
    """
    cam = Camera(config.camera)
    z = relief_plane_z(config)
    out = []
    for (p, d), f in zip(config.relief.fold_lines(), config.relief.folds):
        a = cam.project([p[0] + f.start * d[0], p[1] + f.start * d[1], z])
        b = cam.project([p[0] + f.end * d[0], p[1] + f.end * d[1], z])
        out.append((a, b))
    return out


def projected_stroke_segments(config: SceneConfig):
    """Image-space ``(p0, p1)`` of the last segment of every stroke.

    For the three-lines stage that is the part of each line crossing the ball.
    """
    cam = Camera(config.camera)
    z = relief_plane_z(config)
    out = []
    for s in config.relief.strokes:
        a, b = s.points[-2], s.points[-1]
        out.append((cam.project([a[0], a[1], z]), cam.project([b[0], b[1], z])))
    return out


def project_relief_point(config: SceneConfig, uv) -> np.ndarray:
    return Camera(config.camera).project([uv[0], uv[1], relief_plane_z(config)])
