"""Triangle meshes, their bounding-volume hierarchy and a small OBJ reader."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import InvalidPrimitiveError, Ray, SurfaceHit

MIN_TRIANGLE_AREA = 1e-12  # cm^2
LEAF_SIZE = 4


@dataclass(frozen=True)
class BVH:
    node_min: np.ndarray  # (N, 3)
    node_max: np.ndarray
    left: np.ndarray  # child indices, -1 for leaves
    right: np.ndarray
    start: np.ndarray  # leaf range into ``order``
    count: np.ndarray  # 0 for interior nodes
    order: np.ndarray  # triangle indices, leaf-contiguous

    @property
    def n_nodes(self) -> int:
        return len(self.count)


def build_bvh(triangles: np.ndarray, leaf_size: int = LEAF_SIZE) -> BVH:
    """Median-split BVH over an (T, 3, 3) triangle array."""
    n = len(triangles)
    lo = triangles.min(axis=1)
    hi = triangles.max(axis=1)
    centroids = triangles.mean(axis=1)
    order = np.arange(n, dtype=np.int64)

    node_min, node_max, left, right, start, count = [], [], [], [], [], []

    def new_node():
        node_min.append(np.zeros(3))
        node_max.append(np.zeros(3))
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(count) - 1

    if n == 0:
        empty = np.zeros((0, 3))
        ints = np.zeros(0, dtype=np.int64)
        return BVH(empty, empty, ints, ints, ints, ints, ints)

    root = new_node()
    work = [(root, 0, n)]
    while work:
        node, a, b = work.pop()
        idx = order[a:b]
        node_min[node] = lo[idx].min(axis=0)
        node_max[node] = hi[idx].max(axis=0)
        if b - a <= leaf_size:
            start[node] = a
            count[node] = b - a
            continue
        c = centroids[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        # stable sort keeps the build deterministic for coincident centroids
        order[a:b] = idx[np.argsort(c[:, axis], kind="stable")]
        mid = (a + b) // 2
        l_node = new_node()
        r_node = new_node()
        left[node] = l_node
        right[node] = r_node
        work.append((r_node, mid, b))
        work.append((l_node, a, mid))

    return BVH(
        np.array(node_min, dtype=np.float64),
        np.array(node_max, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(start, dtype=np.int64),
        np.array(count, dtype=np.int64),
        order,
    )


class TriangleMesh:
    """Indexed triangle mesh with per-vertex UVs and a BVH.

    The triangle array is expanded to ``(T, 3, 3)`` once so the render kernel
    can read vertices without indirection.
    """

    def __init__(self, vertices, faces, uvs=None, material_id: int = 0):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64).reshape(-1, 3)
        if uvs is None:
            uvs = np.zeros((len(self.vertices), 2))
        self.uvs = np.ascontiguousarray(uvs, dtype=np.float64).reshape(-1, 2)
        self.material_id = material_id
        nv = len(self.vertices)
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= nv):
            raise InvalidPrimitiveError("triangle index out of range")
        if len(self.uvs) != nv:
            raise InvalidPrimitiveError("need exactly one UV per vertex")
        self.triangles = np.ascontiguousarray(self.vertices[self.faces])
        self.triangle_uvs = np.ascontiguousarray(self.uvs[self.faces])
        areas = self.triangle_areas()
        bad = np.flatnonzero(areas <= MIN_TRIANGLE_AREA)
        if len(bad):
            raise InvalidPrimitiveError(f"degenerate triangle {int(bad[0])} (area {areas[bad[0]]:.3g})")
        self.bvh = build_bvh(self.triangles)

    def __len__(self):
        return len(self.faces)

    def triangle_areas(self) -> np.ndarray:
        t = self.triangles
        return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)

    def face_normals(self) -> np.ndarray:
        t = self.triangles
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def make_hit(self, ray: Ray, tri: int, t: float, bary) -> SurfaceHit:
        bary = np.asarray(bary, dtype=np.float64)
        n = self.face_normals()[tri]
        uv = bary @ self.triangle_uvs[tri]
        return SurfaceHit(t, ray.at(t), n, int(tri), self.material_id,
                          bool(np.dot(ray.direction, n) < 0.0), uv=uv, barycentric=bary)

    def transformed(self, scale=1.0, offset=(0.0, 0.0, 0.0)) -> "TriangleMesh":
        v = self.vertices * np.asarray(scale, dtype=np.float64) + np.asarray(offset, dtype=np.float64)
        return TriangleMesh(v, self.faces, self.uvs, self.material_id)


# --------------------------------------------------------------------------
# procedural meshes


def uv_ellipsoid(center, radii, n_lat: int = 24, n_lon: int = 48) -> TriangleMesh:
    """Closed ellipsoid mesh (poles shared), outward winding."""
    cx, cy, cz = center
    rx, ry, rz = radii
    verts = [(cx, cy + ry, cz)]
    uvs = [(0.5, 1.0)]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        for j in range(n_lon):
            phi = 2 * np.pi * j / n_lon
            verts.append((cx + rx * np.sin(theta) * np.cos(phi),
                          cy + ry * np.cos(theta),
                          cz + rz * np.sin(theta) * np.sin(phi)))
            uvs.append((j / n_lon, 1.0 - i / n_lat))
    verts.append((cx, cy - ry, cz))
    uvs.append((0.5, 0.0))
    south = len(verts) - 1

    def ring(i, j):
        return 1 + (i - 1) * n_lon + (j % n_lon)

    faces = []
    for j in range(n_lon):
        faces.append((0, ring(1, j + 1), ring(1, j)))
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            faces.append((a, b, d))
            faces.append((a, d, c))
    for j in range(n_lon):
        faces.append((south, ring(n_lat - 1, j), ring(n_lat - 1, j + 1)))
    return TriangleMesh(np.array(verts), np.array(faces), np.array(uvs))


def height_field(width: float, height: float, nx: int, ny: int, func=None, z0: float = 0.0) -> TriangleMesh:
    """Grid mesh over ``[-w/2, w/2] x [-h/2, h/2]`` displaced along +z by ``func(x, y)``."""
    xs = np.linspace(-width / 2, width / 2, nx + 1)
    ys = np.linspace(-height / 2, height / 2, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    Z = np.full_like(X, z0) if func is None else z0 + func(X, Y)
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    uvs = np.stack([(X.ravel() + width / 2) / width, (Y.ravel() + height / 2) / height], axis=1)
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, :-1].ravel()
    d = idx[1:, 1:].ravel()
    faces = np.concatenate([np.stack([a, b, d], 1), np.stack([a, d, c], 1)])
    return TriangleMesh(verts, faces, uvs)


# --------------------------------------------------------------------------
# OBJ


class ObjFormatError(ValueError):
    pass


def _obj_index(token: str, n: int, lineno: int) -> int:
    i = int(token)
    if i < 0:
        i = n + i
    else:
        i -= 1
    if not 0 <= i < n:
        raise ObjFormatError(f"line {lineno}: index {token} out of range")
    return i


def parse_obj(text: str) -> TriangleMesh:
    """Read ``v``, ``vt`` and ``f`` records; polygons are fan-triangulated.

    Vertices are split per distinct (position, uv) pair so each vertex carries
    exactly one UV. Everything else in the file is ignored.
    """
    positions, texcoords = [], []
    corner_keys: dict[tuple[int, int], int] = {}
    verts, uvs, faces = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                if len(parts) < 4:
                    raise ObjFormatError(f"line {lineno}: vertex needs three coordinates")
                positions.append(tuple(float(x) for x in parts[1:4]))
            elif tag == "vt":
                u = float(parts[1])
                v = float(parts[2]) if len(parts) > 2 else 0.0
                texcoords.append((u, v))
            elif tag == "f":
                corners = []
                for tok in parts[1:]:
                    fields = tok.split("/")
                    vi = _obj_index(fields[0], len(positions), lineno)
                    ti = -1
                    if len(fields) > 1 and fields[1]:
                        ti = _obj_index(fields[1], len(texcoords), lineno)
                    key = (vi, ti)
                    if key not in corner_keys:
                        corner_keys[key] = len(verts)
                        verts.append(positions[vi])
                        uvs.append(texcoords[ti] if ti >= 0 else (0.0, 0.0))
                    corners.append(corner_keys[key])
                if len(corners) < 3:
                    raise ObjFormatError(f"line {lineno}: face needs at least 3 vertices")
                for k in range(1, len(corners) - 1):
                    faces.append((corners[0], corners[k], corners[k + 1]))
        except (ValueError, IndexError) as exc:
            if isinstance(exc, ObjFormatError):
                raise
            raise ObjFormatError(f"line {lineno}: cannot parse {raw!r}") from exc
    if not faces:
        raise ObjFormatError("OBJ contains no faces")
    return TriangleMesh(np.array(verts), np.array(faces), np.array(uvs))


def load_obj(path) -> TriangleMesh:
    return parse_obj(Path(path).read_text(encoding="utf-8"))


def dump_obj(mesh: TriangleMesh) -> str:
    # repr of a Python float round-trips exactly
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"vt {u!r} {v!r}" for u, v in mesh.uvs.tolist()]
    lines += [f"f {a + 1}/{a + 1} {b + 1}/{b + 1} {c + 1}/{c + 1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"
