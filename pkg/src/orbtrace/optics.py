"""Dielectric interface optics and the analytic chief-ray tracer.

Everything here is pure math on unit vectors; it works in 2D and 3D.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .geometry import RAY_EPSILON

GLASS_IOR = 1.51714
CALCITE_ORDINARY = 1.658
CALCITE_EXTRAORDINARY = 1.486


class GeometryInconsistencyError(RuntimeError):
    """A ray left a medium it never entered."""


@dataclass(frozen=True)
class DielectricSpec:
    ior: float = GLASS_IOR
    tint: tuple = (1.0, 1.0, 1.0)  # transmittance per boundary crossing
    absorption_per_cm: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 1.0 < self.ior <= 3.0:
            raise ValueError(f"ior must lie in (1, 3], got {self.ior}")
        tint = tuple(float(c) for c in self.tint)
        if len(tint) != 3 or not all(0.0 <= c <= 1.0 for c in tint):
            raise ValueError(f"tint channels must lie in [0, 1], got {self.tint}")
        absorb = tuple(float(c) for c in self.absorption_per_cm)
        if len(absorb) != 3 or not all(c >= 0.0 for c in absorb):
            raise ValueError("absorption must be non-negative")
        object.__setattr__(self, "tint", tint)
        object.__setattr__(self, "absorption_per_cm", absorb)


@dataclass(frozen=True)
class CalciteSpec:
    ior_ordinary: float = CALCITE_ORDINARY
    ior_extraordinary: float = CALCITE_EXTRAORDINARY
    tint: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not self.ior_ordinary >= self.ior_extraordinary > 1.0:
            raise ValueError("calcite needs ior_ordinary >= ior_extraordinary > 1")
        object.__setattr__(self, "tint", tuple(float(c) for c in self.tint))

    def as_dielectric(self, which: str) -> DielectricSpec:
        ior = self.ior_ordinary if which == "ordinary" else self.ior_extraordinary
        return DielectricSpec(ior=ior, tint=self.tint)


# --------------------------------------------------------------------------
# interface math


@njit(cache=True)
def fresnel_dielectric(cos_i, eta_from, eta_to):
    """Unpolarised reflectance for a smooth dielectric interface; 1 under TIR."""
    cos_i = min(max(cos_i, 0.0), 1.0)
    sin_t = eta_from / eta_to * math.sqrt(max(0.0, 1.0 - cos_i * cos_i))
    if sin_t >= 1.0:
        return 1.0
    cos_t = math.sqrt(1.0 - sin_t * sin_t)
    rs = (eta_from * cos_i - eta_to * cos_t) / (eta_from * cos_i + eta_to * cos_t)
    rp = (eta_to * cos_i - eta_from * cos_t) / (eta_to * cos_i + eta_from * cos_t)
    return 0.5 * (rs * rs + rp * rp)


def fresnel_reflectance(cos_incident: float, eta_from: float, eta_to: float) -> float:
    if not 0.0 < cos_incident <= 1.0:
        raise ValueError(f"cos_incident must lie in (0, 1], got {cos_incident}")
    if eta_from <= 0 or eta_to <= 0:
        raise ValueError("refractive indices must be positive")
    return float(fresnel_dielectric(cos_incident, eta_from, eta_to))


def fresnel_transmittance(cos_incident: float, eta_from: float, eta_to: float) -> float:
    """Power transmittance from the Fresnel amplitude coefficients.

    Computed independently of :func:`fresnel_reflectance` (through ``t_s`` and
    ``t_p``) so that ``R + T = 1`` is a genuine check of both.
    """
    ci = cos_incident
    sin_t = eta_from / eta_to * math.sqrt(max(0.0, 1.0 - ci * ci))
    if sin_t >= 1.0:
        return 0.0
    ct = math.sqrt(1.0 - sin_t * sin_t)
    ts = 2.0 * eta_from * ci / (eta_from * ci + eta_to * ct)
    tp = 2.0 * eta_from * ci / (eta_to * ci + eta_from * ct)
    return (eta_to * ct) / (eta_from * ci) * 0.5 * (ts * ts + tp * tp)


def reflect(incident, normal) -> np.ndarray:
    d = np.asarray(incident, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    return d - 2.0 * np.dot(d, n) * n


def refract(incident, normal, eta_ratio: float) -> Optional[np.ndarray]:
    """Snell refraction of a unit direction.

    ``normal`` must face the incoming ray (``incident . normal < 0``) and
    ``eta_ratio = n_from / n_to``. Returns ``None`` under total internal
    reflection.
    """
    d = np.asarray(incident, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    cos_i = -float(np.dot(d, n))
    assert cos_i > 0.0, "normal must oppose the incident direction"
    assert eta_ratio > 0.0
    sin2_t = eta_ratio * eta_ratio * max(0.0, 1.0 - cos_i * cos_i)
    if sin2_t > 1.0:
        return None
    cos_t = math.sqrt(1.0 - sin2_t)
    return eta_ratio * d + (eta_ratio * cos_i - cos_t) * n


@njit(cache=True)
def scatter_dielectric(dx, dy, dz, nx, ny, nz, eta_from, eta_to, u):
    """Stochastic reflect-or-refract at a smooth interface.

    ``n`` is the geometric normal on either side; it is flipped to face the
    ray. Returns ``(ox, oy, oz, transmitted, reflectance)``. Reflection is
    chosen with probability equal to the Fresnel reflectance, so the path
    weight is unchanged either way.
    """
    c = dx * nx + dy * ny + dz * nz
    if c > 0.0:
        nx, ny, nz = -nx, -ny, -nz
        c = -c
    cos_i = -c
    F = fresnel_dielectric(cos_i, eta_from, eta_to)
    if u < F:
        return dx + 2.0 * cos_i * nx, dy + 2.0 * cos_i * ny, dz + 2.0 * cos_i * nz, False, F
    eta = eta_from / eta_to
    sin2_t = eta * eta * max(0.0, 1.0 - cos_i * cos_i)
    cos_t = math.sqrt(max(0.0, 1.0 - sin2_t))
    k = eta * cos_i - cos_t
    ox = eta * dx + k * nx
    oy = eta * dy + k * ny
    oz = eta * dz + k * nz
    inv = 1.0 / math.sqrt(ox * ox + oy * oy + oz * oz)
    return ox * inv, oy * inv, oz * inv, True, F


# --------------------------------------------------------------------------
# nested media


AMBIENT_MEDIUM = -1


@dataclass
class MediumStack:
    """Stack of (medium_id, ior) entries; the bottom is always ambient air."""

    entries: list = field(default_factory=lambda: [(AMBIENT_MEDIUM, 1.0)])

    def __post_init__(self):
        if not self.entries:
            raise ValueError("medium stack cannot be empty")

    @property
    def depth(self) -> int:
        return len(self.entries)

    @property
    def top(self):
        return self.entries[-1]

    @property
    def ior(self) -> float:
        return self.entries[-1][1]

    def push(self, medium_id, ior: float):
        self.entries.append((medium_id, ior))

    def pop(self, medium_id, primitive_id=None):
        if len(self.entries) <= 1 or self.entries[-1][0] != medium_id:
            raise GeometryInconsistencyError(
                f"ray exits medium {medium_id!r} at primitive {primitive_id!r} "
                f"but the current medium is {self.entries[-1][0]!r}"
            )
        self.entries.pop()

    def ior_below_top(self) -> float:
        if len(self.entries) < 2:
            raise GeometryInconsistencyError("no enclosing medium below the ambient one")
        return self.entries[-2][1]

    def copy(self) -> "MediumStack":
        return MediumStack(list(self.entries))


@dataclass(frozen=True)
class DielectricEvent:
    direction: np.ndarray
    transmitted: bool
    reflect_probability: float
    weight: np.ndarray  # RGB throughput multiplier
    stack: MediumStack


def shade_dielectric(hit, direction, stack: MediumStack, media: dict, u: float) -> DielectricEvent:
    """Decide reflection vs transmission at a dielectric hit.

    ``media`` maps ``hit.material_id`` to a :class:`DielectricSpec`; ``u`` is
    a uniform sample in [0, 1). The returned event carries an updated copy of
    the medium stack.
    """
    spec = media[hit.material_id]
    stack = stack.copy()
    if hit.entering:
        n_from, n_to = stack.ior, spec.ior
    else:
        if stack.top[0] != hit.material_id:
            raise GeometryInconsistencyError(
                f"ray exits medium {hit.material_id!r} at primitive {hit.primitive_id!r} "
                f"but the current medium is {stack.top[0]!r}"
            )
        n_from, n_to = stack.ior, stack.ior_below_top()
    d = np.asarray(direction, dtype=np.float64)
    n = hit.normal
    ox, oy, oz, transmitted, F = scatter_dielectric(d[0], d[1], d[2], n[0], n[1], n[2], n_from, n_to, u)
    weight = np.ones(3)
    if transmitted:
        weight = np.asarray(spec.tint, dtype=np.float64)
        if hit.entering:
            stack.push(hit.material_id, spec.ior)
        else:
            stack.pop(hit.material_id, hit.primitive_id)
    return DielectricEvent(np.array([ox, oy, oz]), bool(transmitted), float(F), weight, stack)


# --------------------------------------------------------------------------
# analytic 2D chief ray


@dataclass(frozen=True)
class Shell2D:
    center: tuple
    outer_radius: float
    thickness: float
    ior: float = GLASS_IOR

    def __post_init__(self):
        if not 0.0 < self.thickness <= self.outer_radius:
            raise ValueError("shell thickness must lie in (0, outer_radius]")

    @property
    def inner_radius(self) -> float:
        return self.outer_radius - self.thickness


@dataclass(frozen=True)
class PolylinePath:
    points: list  # list of 2-vectors, eye first
    exit_origin: np.ndarray
    exit_direction: np.ndarray
    events: list  # "refract" or "tir" per interface
    undeviated: bool = False

    def deviation_angle(self, initial_direction) -> float:
        d0 = np.asarray(initial_direction, dtype=np.float64)
        cross = d0[0] * self.exit_direction[1] - d0[1] * self.exit_direction[0]
        dot = float(np.dot(d0, self.exit_direction))
        return abs(math.atan2(cross, dot))

    def hit_line(self, axis: int, value: float) -> np.ndarray:
        """Where the exit ray crosses the line ``coord[axis] == value``."""
        s = (value - self.exit_origin[axis]) / self.exit_direction[axis]
        return self.exit_origin + s * self.exit_direction


def _circle_roots(o, d, c, r):
    f = o - c
    b = float(np.dot(f, d))
    perp = f - b * d
    disc = r * r - float(np.dot(perp, perp))
    if not disc > 0.0:
        return ()
    cc = float(np.dot(f, f)) - r * r
    sq = math.sqrt(disc)
    q = -b - sq if b >= 0.0 else -b + sq
    t0, t1 = cc / q, q
    return (min(t0, t1), max(t0, t1))


def trace_shell_2d(eye, orb: Shell2D, target, max_events: int = 16) -> PolylinePath:
    """Follow the transmitted chief ray from ``eye`` toward ``target``.

    No Fresnel branching: the ray refracts at every interface and reflects
    only under total internal reflection.
    """
    o = np.asarray(eye, dtype=np.float64)
    c = np.asarray(orb.center, dtype=np.float64)
    if np.linalg.norm(o - c) <= orb.outer_radius:
        raise ValueError("eye must lie outside the orb")
    d = np.asarray(target, dtype=np.float64) - o
    d = d / np.linalg.norm(d)
    spheres = [(orb.outer_radius, orb.ior)]
    if orb.inner_radius >= RAY_EPSILON:
        spheres.append((orb.inner_radius, 1.0))
    # medium stack of sphere indices; -1 is outside air
    stack = [-1]
    points = [o.copy()]
    events = []
    eps = 1e-12
    for _ in range(max_events):
        best = None
        for k, (r, _) in enumerate(spheres):
            for t in _circle_roots(o, d, c, r):
                if t > eps and (best is None or t < best[0]):
                    best = (t, k)
        if best is None:
            break
        t, k = best
        p = o + t * d
        n = (p - c) / spheres[k][0]
        entering = float(np.dot(d, n)) < 0.0
        n_cur = 1.0 if stack[-1] == -1 else spheres[stack[-1]][1]
        if entering:
            n_next = spheres[k][1]
        else:
            n_next = 1.0 if stack[-2] == -1 else spheres[stack[-2]][1]
        facing = n if entering else -n
        new_d = refract(d, facing, n_cur / n_next)
        if new_d is None:
            new_d = reflect(d, facing)
            events.append("tir")
        else:
            events.append("refract")
            if entering:
                stack.append(k)
            else:
                stack.pop()
        d = new_d / np.linalg.norm(new_d)
        o = p
        points.append(p.copy())
    return PolylinePath(points, o, d, events, undeviated=not events)


def aim_with_impact_parameter(eye, center, impact: float) -> np.ndarray:
    """A target point so the ray from ``eye`` passes ``impact`` from ``center``.

    The offset is taken to the left of the eye-to-center direction.
    """
    e = np.asarray(eye, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    axis = c - e
    dist = float(np.linalg.norm(axis))
    axis /= dist
    side = np.array([-axis[1], axis[0]])
    ang = math.asin(impact / dist)
    d = math.cos(ang) * axis + math.sin(ang) * side
    return e + dist * d


def background_displacement(eye, orb: Shell2D, impact: float, plane_offset: float) -> float:
    """Lateral shift of the exit ray on a background line behind the orb.

    The background is perpendicular to the eye/center axis at ``plane_offset``
    beyond the center; the result is the signed shift along that line
    relative to the undeviated ray.
    """
    e = np.asarray(eye, dtype=np.float64)
    c = np.asarray(orb.center, dtype=np.float64)
    axis = (c - e) / np.linalg.norm(c - e)
    side = np.array([-axis[1], axis[0]])
    target = aim_with_impact_parameter(e, c, impact)
    path = trace_shell_2d(e, orb, target)
    plane_point = c + plane_offset * axis

    def land(o, d):
        s = float(np.dot(plane_point - o, axis)) / float(np.dot(d, axis))
        return o + s * d

    d0 = (target - e) / np.linalg.norm(target - e)
    straight = land(e, d0)
    bent = land(path.exit_origin, path.exit_direction)
    return float(np.dot(bent - straight, side))
