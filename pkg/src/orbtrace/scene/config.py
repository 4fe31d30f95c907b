"""Scene description dataclasses.

All lengths are centimetres, angles degrees. The dataclasses are frozen;
use :func:`dataclasses.replace` (or the helpers below) to derive variants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from ..optics import CalciteSpec, DielectricSpec
from ..render.settings import RenderSettings

ORB_RADIUS_CM = 6.8
RELIEF_DISTANCE_CM = 25.0
CAMERA_DISTANCE_CM = 90.0  # from the subject (relief)
DEFAULT_THICKNESS_CM = 0.13
DEFAULT_TINT = (0.94, 0.93, 0.90)

Vec2 = tuple
Vec3 = tuple


def _vec(value, n):
    out = tuple(float(x) for x in value)
    if len(out) != n or not all(math.isfinite(x) for x in out):
        raise ValueError(f"expected {n} finite numbers, got {value!r}")
    return out


@dataclass(frozen=True)
class OrbSpec:
    center: Vec3 = (0.0, 0.0, 0.0)
    radius: float = ORB_RADIUS_CM
    thickness: float = DEFAULT_THICKNESS_CM  # == radius for a solid ball
    material: Union[DielectricSpec, CalciteSpec] = DielectricSpec(tint=DEFAULT_TINT)
    lateral_shift: float = 0.0  # cm along -u of the relief (the viewer's left)
    present: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, 3))
        if not self.radius > 0:
            raise ValueError(f"orb radius must be positive, got {self.radius}")
        if not 0.0 < self.thickness <= self.radius:
            raise ValueError(
                f"orb thickness {self.thickness} cm must lie in (0, radius={self.radius} cm]"
            )

    @property
    def solid(self) -> bool:
        return self.thickness >= self.radius

    @property
    def inner_radius(self) -> float:
        return self.radius - self.thickness


@dataclass(frozen=True)
class CameraSpec:
    position: Vec3 = (0.0, 0.0, CAMERA_DISTANCE_CM - RELIEF_DISTANCE_CM)
    look_at: Vec3 = (0.0, 0.0, -RELIEF_DISTANCE_CM)
    up: Vec3 = (0.0, 1.0, 0.0)
    vertical_fov: float = 30.0
    width: int = 1024
    height: int = 1024

    def __post_init__(self):
        for name in ("position", "look_at", "up"):
            object.__setattr__(self, name, _vec(getattr(self, name), 3))
        if not 1.0 < self.vertical_fov < 120.0:
            raise ValueError(f"vertical_fov must lie in (1, 120) degrees, got {self.vertical_fov}")
        if int(self.width) != self.width or int(self.height) != self.height or self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive integers")
        fwd = np.subtract(self.look_at, self.position)
        if np.linalg.norm(fwd) == 0 or np.linalg.norm(np.cross(fwd, self.up)) == 0:
            raise ValueError("camera look direction must be non-zero and not parallel to up")


def cone_directions(elevation_deg: float, azimuth_deg: float, half_angle_deg: float,
                    count: int) -> tuple:
    """``count`` unit directions: the main one plus a ring at ``half_angle``.

    Elevation is measured above the horizontal (xz) plane and azimuth about
    +y starting from +z, the direction toward the camera.
    """
    if count < 1:
        raise ValueError("need at least one light direction")
    el, az = math.radians(elevation_deg), math.radians(azimuth_deg)
    main = np.array([math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)])
    dirs = [main]
    if count > 1:
        helper = np.array([1.0, 0.0, 0.0]) if abs(main[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        a = np.cross(main, helper)
        a /= np.linalg.norm(a)
        b = np.cross(main, a)
        h = math.radians(half_angle_deg)
        for k in range(count - 1):
            phi = 2.0 * math.pi * k / (count - 1)
            d = math.cos(h) * main + math.sin(h) * (math.cos(phi) * a + math.sin(phi) * b)
            dirs.append(d / np.linalg.norm(d))
    return tuple(tuple(float(x) for x in d) for d in dirs)


MAIN_RADIANCE = (3.0, 2.9, 2.7)


@dataclass(frozen=True)
class LightRig:
    main_directions: tuple = cone_directions(60.0, -20.0, 5.0, 5)
    main_radiance: Vec3 = MAIN_RADIANCE  # total over all directions
    ambient_radiance: Vec3 = tuple(0.04 * c for c in MAIN_RADIANCE)

    def __post_init__(self):
        dirs = []
        for d in self.main_directions:
            v = _vec(d, 3)
            n = math.sqrt(sum(x * x for x in v))
            if n == 0:
                raise ValueError("zero light direction")
            if abs(n - 1.0) > 1e-12:
                v = tuple(x / n for x in v)
            dirs.append(v)
        object.__setattr__(self, "main_directions", tuple(dirs))
        object.__setattr__(self, "main_radiance", _vec(self.main_radiance, 3))
        object.__setattr__(self, "ambient_radiance", _vec(self.ambient_radiance, 3))
        if not (all(c >= 0 for c in self.main_radiance) and all(c >= 0 for c in self.ambient_radiance)):
            raise ValueError("light radiance must be non-negative")

    @property
    def per_direction_radiance(self) -> np.ndarray:
        return np.asarray(self.main_radiance) / len(self.main_directions)


@dataclass(frozen=True)
class FoldSpec:
    """A straight robe fold on the relief.

    The fold edge is the line through the convergence point (shifted
    sideways by ``offset``) at ``angle`` counter-clockwise from +u. It is drawn
    as a dark crease of full width at half maximum ``width``, straight from
    ``start`` to ``end`` (distance along the edge from the foot point). With
    ``bend_radius > 0`` it continues along a circular arc of that radius
    through ``bend_angle`` degrees (negative turns clockwise); the default
    lets the crease stop at ``end``, as if it turned sharply out of view.
    A bump-mapped ridge runs beside the crease.
    """

    angle: float
    offset: float = 0.0
    start: float = 4.0
    end: float = 18.0
    bend_radius: float = 0.0
    bend_angle: float = -30.0
    width: float = 0.35
    darkness: float = 0.75
    ridge_height: float = 0.1
    ridge_width: float = 0.8
    shadow_width: float = 0.0
    shadow_darkness: float = 0.0
    exempt: bool = False

    def __post_init__(self):
        if not (self.end > self.start and self.width > 0 and 0 <= self.darkness <= 1):
            raise ValueError("invalid fold geometry")
        if not (0 <= self.shadow_darkness <= 1 and self.shadow_width >= 0 and self.ridge_width > 0):
            raise ValueError("invalid fold shadow/ridge")
        if not (self.bend_radius >= 0 and abs(self.bend_angle) <= 180):
            raise ValueError("invalid fold bend")


@dataclass(frozen=True)
class StrokeSpec:
    """Dark polyline painted on the relief (relief coordinates, cm)."""

    points: tuple
    width: float = 0.3
    darkness: float = 0.9

    def __post_init__(self):
        pts = tuple(_vec(p, 2) for p in self.points)
        if len(pts) < 2:
            raise ValueError("a stroke needs at least two points")
        object.__setattr__(self, "points", pts)
        if not (self.width > 0 and 0 <= self.darkness <= 1):
            raise ValueError("invalid stroke")


@dataclass(frozen=True)
class BandSpec:
    """Straight albedo band: centre line ``n . x = offset`` with n at ``angle + 90``."""

    angle: float
    offset: float
    width: float
    albedo: Vec3 = (1.0, 1.0, 1.0)  # multiplier
    softness: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "albedo", _vec(self.albedo, 3))
        if not (self.width > 0 and self.softness > 0):
            raise ValueError("invalid band")


# radial folds of the default relief; the last ("leftmost") one is offset from
# the convergence point and casts a wider shadow
DEFAULT_FOLDS = (
    FoldSpec(angle=18.0),
    FoldSpec(angle=33.0),
    FoldSpec(angle=48.0),
    FoldSpec(angle=62.0),
    FoldSpec(angle=78.0, offset=1.2, shadow_width=1.5, shadow_darkness=0.5, exempt=True),
)
DEFAULT_BANDS = (
    BandSpec(angle=0.0, offset=21.0, width=3.0, albedo=(1.5, 1.25, 0.7)),  # chest band
    BandSpec(angle=90.0, offset=6.0, width=2.5, albedo=(1.5, 1.25, 0.7)),  # placket at u = -6
)


@dataclass(frozen=True)
class ReliefSpec:
    distance: float = RELIEF_DISTANCE_CM  # behind the orb centre
    width: float = 400.0
    height: float = 400.0
    albedo: Vec3 = (0.30, 0.36, 0.52)
    convergence: Optional[Vec2] = (0.0, 0.0)
    folds: tuple = DEFAULT_FOLDS
    strokes: tuple = ()
    bands: tuple = DEFAULT_BANDS
    texture: Optional[str] = None  # PNG/PPM spread over the relief rectangle

    def __post_init__(self):
        object.__setattr__(self, "albedo", _vec(self.albedo, 3))
        if self.convergence is not None:
            object.__setattr__(self, "convergence", _vec(self.convergence, 2))
        object.__setattr__(self, "folds", tuple(self.folds))
        object.__setattr__(self, "strokes", tuple(self.strokes))
        object.__setattr__(self, "bands", tuple(self.bands))
        if not (self.distance > 0 and self.width > 0 and self.height > 0):
            raise ValueError("relief size and distance must be positive")
        if self.convergence is not None:
            for i, f in enumerate(self.folds):
                if not f.exempt and abs(f.offset) > 1e-6:
                    raise ValueError(f"fold {i} is not exempt but misses the convergence point "
                                     f"by {abs(f.offset)} cm")

    def fold_lines(self):
        """(point, unit direction) of every fold edge in relief coordinates."""
        c = np.asarray(self.convergence if self.convergence is not None else (0.0, 0.0))
        out = []
        for f in self.folds:
            a = math.radians(f.angle)
            d = np.array([math.cos(a), math.sin(a)])
            n = np.array([-d[1], d[0]])
            out.append((c + f.offset * n, d))
        return out


@dataclass(frozen=True)
class HandSpec:
    enabled: bool = True
    center: Vec3 = (-2.0, -6.0, -9.5)
    radii: Vec3 = (4.0, 3.0, 1.4)
    albedo: Vec3 = (0.55, 0.38, 0.28)
    mesh: Optional[str] = None  # OBJ replacing the procedural palm
    resolution: int = 24

    def __post_init__(self):
        for name in ("center", "radii", "albedo"):
            object.__setattr__(self, name, _vec(getattr(self, name), 3))
        if self.resolution < 4:
            raise ValueError("hand resolution must be >= 4")


@dataclass(frozen=True)
class SceneConfig:
    orb: OrbSpec = field(default_factory=OrbSpec)
    camera: CameraSpec = field(default_factory=CameraSpec)
    lights: LightRig = field(default_factory=LightRig)
    relief: ReliefSpec = field(default_factory=ReliefSpec)
    hand: HandSpec = field(default_factory=HandSpec)
    render: RenderSettings = field(default_factory=RenderSettings)


def replace_orb(config: SceneConfig, **changes) -> SceneConfig:
    return replace(config, orb=replace(config.orb, **changes))


def replace_camera(config: SceneConfig, **changes) -> SceneConfig:
    return replace(config, camera=replace(config.camera, **changes))


def replace_render(config: SceneConfig, **changes) -> SceneConfig:
    return replace(config, render=replace(config.render, **changes))


def orb_center_world(config: SceneConfig) -> np.ndarray:
    """Orb centre after the lateral shift.

    The shift runs along the relief's -u axis (the viewer's left in the
    default view) so it stays fixed relative to the relief when the camera
    moves.
    """
    c = np.asarray(config.orb.center, dtype=np.float64).copy()
    c[0] -= config.orb.lateral_shift
    return c


def relief_plane_z(config: SceneConfig) -> float:
    return config.orb.center[2] - config.relief.distance
