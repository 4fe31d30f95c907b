"""Compile a :class:`SceneConfig` into the flat arrays the kernel consumes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..geometry import RAY_EPSILON
from ..imageio import load_texture
from ..mesh import TriangleMesh, build_bvh, load_obj, uv_ellipsoid
from ..optics import CalciteSpec, DielectricSpec
from ..render.kernel import KernelScene
from .camera import Camera, Circle
from .config import SceneConfig, orb_center_world, relief_plane_z

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass
class Scene:
    """Renderable scene: kernel arrays plus the geometry the analysis needs."""

    config: SceneConfig
    kernel: KernelScene
    camera: Camera
    orb_center: np.ndarray
    hand_mesh: Optional[TriangleMesh]

    def orb_silhouette(self) -> Circle:
        return self.camera.sphere_silhouette(self.orb_center, self.config.orb.radius)

    def relief_point(self, u: float, v: float) -> np.ndarray:
        return np.array([u, v, relief_plane_z(self.config)])


def _orb_material(orb) -> DielectricSpec:
    m = orb.material
    if isinstance(m, CalciteSpec):
        # a single render of calcite uses the ordinary index
        return m.as_dielectric("ordinary")
    return m


def _spheres(config: SceneConfig, center: np.ndarray):
    orb = config.orb
    if not orb.present:
        return np.zeros((0, 8)), np.zeros((0, 3))
    mat = _orb_material(orb)
    rows = [[*center, orb.radius, mat.ior, *mat.tint]]
    absorb = [list(mat.absorption_per_cm)]
    if orb.inner_radius >= RAY_EPSILON:
        rows.append([*center, orb.inner_radius, 1.0, 1.0, 1.0, 1.0])
        absorb.append([0.0, 0.0, 0.0])
    return np.array(rows, dtype=np.float64), np.array(absorb, dtype=np.float64)


def _fold_rows(relief) -> np.ndarray:
    rows = []
    for (p, d), f in zip(relief.fold_lines(), relief.folds):
        rows.append([p[0], p[1], d[0], d[1], f.start, f.end, f.width * FWHM_TO_SIGMA, f.darkness,
                     f.ridge_height, f.ridge_width * FWHM_TO_SIGMA, 1.5 * f.ridge_width,
                     f.shadow_width, f.shadow_darkness, f.bend_radius, math.radians(f.bend_angle), 0.0])
    return np.array(rows, dtype=np.float64).reshape(-1, 16)


def _segment_rows(relief) -> np.ndarray:
    rows = []
    for sid, s in enumerate(relief.strokes):
        for a, b in zip(s.points[:-1], s.points[1:]):
            if a == b:
                continue
            rows.append([a[0], a[1], b[0], b[1], s.width * FWHM_TO_SIGMA, s.darkness, float(sid)])
    return np.array(rows, dtype=np.float64).reshape(-1, 7)


def _band_rows(relief) -> np.ndarray:
    rows = []
    for b in relief.bands:
        a = math.radians(b.angle)
        rows.append([-math.sin(a), math.cos(a), b.offset, 0.5 * b.width, b.softness, *b.albedo])
    return np.array(rows, dtype=np.float64).reshape(-1, 8)


def hand_mesh(config: SceneConfig) -> Optional[TriangleMesh]:
    h = config.hand
    if not h.enabled:
        return None
    if h.mesh is not None:
        return load_obj(h.mesh)
    return uv_ellipsoid(h.center, h.radii, n_lat=h.resolution, n_lon=2 * h.resolution)


def build_scene(config: SceneConfig) -> Scene:
    camera = Camera(config.camera)
    center = orb_center_world(config)
    sph, sph_absorb = _spheres(config, center)

    relief = config.relief
    z = relief_plane_z(config)
    # quad rows: origin, U, V, N, half extents, material
    quads = np.array([[0.0, 0.0, z, 1, 0, 0, 0, 1, 0, 0, 0, 1,
                       relief.width / 2, relief.height / 2, 0, 0]], dtype=np.float64)

    mats = [[*relief.albedo, 1.0]]
    mesh = hand_mesh(config)
    if mesh is not None:
        mats.append([*config.hand.albedo, 0.0])
        tris = mesh.triangles
        tri_mat = np.full(len(tris), 1, dtype=np.int64)
        bvh = mesh.bvh
    else:
        tris = np.zeros((0, 3, 3))
        tri_mat = np.zeros(0, dtype=np.int64)
        bvh = build_bvh(tris)

    if relief.texture is not None:
        tex = np.ascontiguousarray(load_texture(relief.texture))
        tex_info = np.array([1.0, -relief.width / 2, -relief.height / 2,
                             relief.width / 2, relief.height / 2])
    else:
        tex = np.ones((1, 1, 3))
        tex_info = np.zeros(5)

    lights = config.lights
    kernel = KernelScene(
        cam=camera.packed(),
        sph=np.ascontiguousarray(sph),
        sph_absorb=np.ascontiguousarray(sph_absorb),
        quads=quads,
        tris=np.ascontiguousarray(tris, dtype=np.float64),
        tri_mat=tri_mat,
        bvh_min=bvh.node_min, bvh_max=bvh.node_max, bvh_left=bvh.left, bvh_right=bvh.right,
        bvh_start=bvh.start, bvh_count=bvh.count, bvh_order=bvh.order,
        mats=np.array(mats, dtype=np.float64),
        folds=_fold_rows(relief),
        segs=_segment_rows(relief),
        bands=_band_rows(relief),
        tex=tex.astype(np.float64),
        tex_info=tex_info,
        light_dirs=np.array(lights.main_directions, dtype=np.float64).reshape(-1, 3),
        light=np.array([*lights.main_radiance, *lights.ambient_radiance], dtype=np.float64),
    )
    return Scene(config, kernel, camera, center, mesh)
