"""Rays and ray/primitive intersection: spheres, concentric shells, triangles.

Positions are in centimetres throughout. Points and directions are plain
``numpy`` float64 arrays of length 3.

The scalar routines decorated with ``njit`` are shared with the render
kernel, so the Python-level API and the integrator agree bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

#: Offset applied to spawned rays along the surface normal (cm).
RAY_EPSILON = 1e-4

UNIT_TOLERANCE = 1e-9


class InvalidPrimitiveError(ValueError):
    """Raised for primitives that violate their construction invariants."""


def as_point(value) -> np.ndarray:
    p = np.asarray(value, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite point {p}")
    return p


def as_unit(value) -> np.ndarray:
    """Normalise ``value``; raises if it has zero or non-finite length."""
    v = np.asarray(value, dtype=np.float64).reshape(-1)
    n = float(np.linalg.norm(v))
    if not np.isfinite(n) or n == 0.0:
        raise ValueError(f"cannot normalise {v}")
    return v / n


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    t_min: float = 0.0
    t_max: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, "origin", as_point(self.origin))
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(d) - 1.0) > UNIT_TOLERANCE:
            raise ValueError("ray direction must be unit length")
        object.__setattr__(self, "direction", d)
        if not (0.0 <= self.t_min < self.t_max):
            raise ValueError(f"invalid ray interval [{self.t_min}, {self.t_max}]")

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class SurfaceHit:
    t: float
    point: np.ndarray
    normal: np.ndarray  # geometric, outward from the primitive
    primitive_id: int
    material_id: int
    entering: bool
    interface: str = ""  # "outer"/"inner" for shells
    uv: Optional[np.ndarray] = None
    barycentric: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Shell:
    """Concentric glass shell; ``thickness == outer_radius`` is a solid ball."""

    center: np.ndarray
    outer_radius: float
    thickness: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.outer_radius > 0:
            raise InvalidPrimitiveError(f"outer radius must be positive, got {self.outer_radius}")
        if not (0.0 < self.thickness <= self.outer_radius):
            raise InvalidPrimitiveError(
                f"shell thickness {self.thickness} outside (0, {self.outer_radius}]"
            )

    @property
    def inner_radius(self) -> float:
        return self.outer_radius - self.thickness

    @property
    def solid(self) -> bool:
        # a cavity smaller than the ray offset cannot be resolved
        return self.inner_radius < RAY_EPSILON


# --------------------------------------------------------------------------
# scalar kernels


@njit(cache=True)
def sphere_roots(ox, oy, oz, dx, dy, dz, cx, cy, cz, r):
    """Both roots of ``|o + t d - c| = r`` for unit ``d``.

    Returns ``(hit, t_near, t_far)``. Tangent rays (zero discriminant) count
    as misses so that crossings always come in pairs.
    """
    fx = ox - cx
    fy = oy - cy
    fz = oz - cz
    b = fx * dx + fy * dy + fz * dz
    # perpendicular offset form keeps the discriminant accurate when the
    # ray origin is far from the sphere
    px = fx - b * dx
    py = fy - b * dy
    pz = fz - b * dz
    disc = r * r - (px * px + py * py + pz * pz)
    if not disc > 0.0:
        return False, 0.0, 0.0
    c = fx * fx + fy * fy + fz * fz - r * r
    sq = np.sqrt(disc)
    q = -b - sq if b >= 0.0 else -b + sq
    if q == 0.0:
        return True, -sq, sq
    t0 = c / q
    t1 = q
    if t0 > t1:
        t0, t1 = t1, t0
    return True, t0, t1


@njit(cache=True)
def nearest_sphere_t(ox, oy, oz, dx, dy, dz, cx, cy, cz, r, t_min, t_max):
    """Nearest root inside ``[t_min, t_max]`` or -1."""
    hit, t0, t1 = sphere_roots(ox, oy, oz, dx, dy, dz, cx, cy, cz, r)
    if not hit:
        return -1.0
    if t_min <= t0 <= t_max:
        return t0
    if t_min <= t1 <= t_max:
        return t1
    return -1.0


@njit(cache=True)
def triangle_hit(ox, oy, oz, dx, dy, dz, v, t_min, t_max):
    """Watertight ray/triangle test.

    ``v`` is a (3, 3) vertex array. Returns ``(t, b0, b1, b2)`` with ``t < 0``
    for a miss. Edge-on and parallel rays miss.
    """
    adx = abs(dx)
    ady = abs(dy)
    adz = abs(dz)
    if adx > ady and adx > adz:
        kz = 0
    elif ady > adz:
        kz = 1
    else:
        kz = 2
    kx = (kz + 1) % 3
    ky = (kx + 1) % 3
    d = (dx, dy, dz)
    o = (ox, oy, oz)
    if d[kz] < 0.0:
        kx, ky = ky, kx
    sx = d[kx] / d[kz]
    sy = d[ky] / d[kz]
    sz = 1.0 / d[kz]

    ax = v[0, kx] - o[kx]
    ay = v[0, ky] - o[ky]
    az = v[0, kz] - o[kz]
    bx = v[1, kx] - o[kx]
    by = v[1, ky] - o[ky]
    bz = v[1, kz] - o[kz]
    cx = v[2, kx] - o[kx]
    cy = v[2, ky] - o[ky]
    cz = v[2, kz] - o[kz]

    ax = ax - sx * az
    ay = ay - sy * az
    bx = bx - sx * bz
    by = by - sy * bz
    cx = cx - sx * cz
    cy = cy - sy * cz

    u = cx * by - cy * bx
    w_v = ax * cy - ay * cx
    w = bx * ay - by * ax
    if (u < 0.0 or w_v < 0.0 or w < 0.0) and (u > 0.0 or w_v > 0.0 or w > 0.0):
        return -1.0, 0.0, 0.0, 0.0
    det = u + w_v + w
    if det == 0.0:
        return -1.0, 0.0, 0.0, 0.0
    tt = (u * sz * az + w_v * sz * bz + w * sz * cz) / det
    if tt < t_min or tt > t_max:
        return -1.0, 0.0, 0.0, 0.0
    return tt, u / det, w_v / det, w / det


@njit(cache=True)
def box_entry(ox, oy, oz, ix, iy, iz, bmin, bmax, t_min, t_max):
    """Slab test against an AABB given reciprocal direction; -1 on miss."""
    t0 = t_min
    t1 = t_max
    o = (ox, oy, oz)
    inv = (ix, iy, iz)
    for a in range(3):
        ta = (bmin[a] - o[a]) * inv[a]
        tb = (bmax[a] - o[a]) * inv[a]
        if ta > tb:
            ta, tb = tb, ta
        # NaN from 0 * inf leaves the interval untouched
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return -1.0
    return t0


@njit(cache=True)
def bvh_nearest(ox, oy, oz, dx, dy, dz, t_min, t_max,
                tris, node_min, node_max, node_left, node_right, node_start,
                node_count, tri_order):
    """Nearest triangle hit through the BVH.

    Returns ``(tri_index, t, b0, b1, b2)``; ``tri_index == -1`` on a miss.
    Equal ``t`` ties go to the lowest triangle index so results match an
    exhaustive scan exactly.
    """
    best_t = t_max
    best_i = -1
    bb0 = 0.0
    bb1 = 0.0
    bb2 = 0.0
    if node_min.shape[0] == 0:
        return best_i, best_t, bb0, bb1, bb2
    ix = 1.0 / dx if dx != 0.0 else np.inf
    iy = 1.0 / dy if dy != 0.0 else np.inf
    iz = 1.0 / dz if dz != 0.0 else np.inf
    stack = np.empty(64, dtype=np.int64)
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if box_entry(ox, oy, oz, ix, iy, iz, node_min[node], node_max[node], t_min, best_t) < 0.0:
            continue
        count = node_count[node]
        if count > 0:
            start = node_start[node]
            for k in range(start, start + count):
                ti = tri_order[k]
                t, b0, b1, b2 = triangle_hit(ox, oy, oz, dx, dy, dz, tris[ti], t_min, best_t)
                if t >= 0.0 and (t < best_t or best_i == -1 or (t == best_t and ti < best_i)):
                    best_t = t
                    best_i = ti
                    bb0 = b0
                    bb1 = b1
                    bb2 = b2
        else:
            stack[sp] = node_left[node]
            sp += 1
            stack[sp] = node_right[node]
            sp += 1
    if best_i == -1:
        return -1, t_max, 0.0, 0.0, 0.0
    return best_i, best_t, bb0, bb1, bb2


@njit(cache=True)
def brute_nearest(ox, oy, oz, dx, dy, dz, t_min, t_max, tris):
    best_t = t_max
    best_i = -1
    bb0 = 0.0
    bb1 = 0.0
    bb2 = 0.0
    for ti in range(tris.shape[0]):
        t, b0, b1, b2 = triangle_hit(ox, oy, oz, dx, dy, dz, tris[ti], t_min, best_t)
        if t >= 0.0 and (t < best_t or best_i == -1):
            best_t = t
            best_i = ti
            bb0 = b0
            bb1 = b1
            bb2 = b2
    return best_i, best_t, bb0, bb1, bb2


@njit(cache=True)
def count_sphere_crossings(origins, dirs, center, radii):
    """Number of crossings of each ray (t > 0) with a set of concentric spheres."""
    n = origins.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for r in radii:
            hit, t0, t1 = sphere_roots(origins[i, 0], origins[i, 1], origins[i, 2],
                                       dirs[i, 0], dirs[i, 1], dirs[i, 2],
                                       center[0], center[1], center[2], r)
            if hit:
                if t0 > 0.0:
                    out[i] += 1
                if t1 > 0.0:
                    out[i] += 1
    return out


@njit(cache=True)
def count_mesh_crossings(origins, dirs, tris):
    """Number of triangles each ray (t > 0) crosses, by exhaustive scan."""
    n = origins.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for ti in range(tris.shape[0]):
            t, _, _, _ = triangle_hit(origins[i, 0], origins[i, 1], origins[i, 2],
                                      dirs[i, 0], dirs[i, 1], dirs[i, 2],
                                      tris[ti], 0.0, np.inf)
            if t > 0.0:
                out[i] += 1
    return out


# --------------------------------------------------------------------------
# Python-level API


def intersect_sphere(ray: Ray, center, radius: float, *, primitive_id: int = 0,
                     material_id: int = 0) -> Optional[SurfaceHit]:
    if not radius > 0:
        raise InvalidPrimitiveError(f"sphere radius must be positive, got {radius}")
    c = as_point(center)
    o, d = ray.origin, ray.direction
    t = nearest_sphere_t(o[0], o[1], o[2], d[0], d[1], d[2], c[0], c[1], c[2],
                         float(radius), ray.t_min, ray.t_max)
    if t < 0.0:
        return None
    p = ray.at(t)
    n = (p - c) / radius
    return SurfaceHit(t, p, n, primitive_id, material_id, bool(np.dot(d, n) < 0.0))


def intersect_shell(ray: Ray, shell: Shell, *, primitive_id: int = 0,
                    material_id: int = 0) -> list[SurfaceHit]:
    """All hits with the outer and inner spheres of ``shell``, sorted by ``t``."""
    if not isinstance(shell, Shell):
        raise TypeError("expected a Shell")
    c = shell.center
    o, d = ray.origin, ray.direction
    spheres = [("outer", shell.outer_radius)]
    if not shell.solid:
        spheres.append(("inner", shell.inner_radius))
    hits = []
    for label, r in spheres:
        ok, t0, t1 = sphere_roots(o[0], o[1], o[2], d[0], d[1], d[2], c[0], c[1], c[2], r)
        if not ok:
            continue
        for t in (t0, t1):
            if ray.t_min <= t <= ray.t_max:
                p = ray.at(t)
                n = (p - c) / r
                hits.append(SurfaceHit(t, p, n, primitive_id, material_id,
                                       bool(np.dot(d, n) < 0.0), label))
    hits.sort(key=lambda h: h.t)
    return hits


def intersect_mesh(ray: Ray, mesh) -> Optional[SurfaceHit]:
    """Nearest hit against a :class:`orbtrace.mesh.TriangleMesh` via its BVH."""
    o, d = ray.origin, ray.direction
    b = mesh.bvh
    ti, t, b0, b1, b2 = bvh_nearest(o[0], o[1], o[2], d[0], d[1], d[2], ray.t_min, ray.t_max,
                                   mesh.triangles, b.node_min, b.node_max, b.left, b.right,
                                   b.start, b.count, b.order)
    if ti < 0:
        return None
    return mesh.make_hit(ray, ti, t, (b0, b1, b2))
