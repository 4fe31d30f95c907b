import numpy as np
import pytest

from orbtrace.geometry import InvalidPrimitiveError, Ray, brute_nearest, bvh_nearest, count_mesh_crossings, \
    intersect_mesh
from orbtrace.mesh import ObjFormatError, TriangleMesh, dump_obj, height_field, parse_obj, uv_ellipsoid


def right_triangle():
    v = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    uv = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return TriangleMesh(v, [[0, 1, 2]], uv)


def relief(n):
    """Height field with ~``n`` triangles and some relief to exercise the BVH."""
    k = int(np.sqrt(n / 2))
    return height_field(40.0, 40.0, k, k, lambda x, y: 0.8 * np.sin(0.7 * x) * np.cos(0.4 * y), z0=-25.0)


def compare_with_scan(mesh, rays):
    b = mesh.bvh
    for o, d in rays:
        got = bvh_nearest(*o, *d, 0.0, np.inf, mesh.triangles, b.node_min, b.node_max, b.left, b.right,
                          b.start, b.count, b.order)
        ref = brute_nearest(*o, *d, 0.0, np.inf, mesh.triangles)
        assert got[0] == ref[0]
        if ref[0] >= 0:
            assert abs(got[1] - ref[1]) <= 1e-9


def random_rays(rng, n, spread=22.0):
    out = []
    for _ in range(n):
        o = np.array([rng.uniform(-5, 5), rng.uniform(-5, 5), 60.0])
        target = np.array([rng.uniform(-spread, spread), rng.uniform(-spread, spread), -25.0])
        d = target - o
        out.append((o, d / np.linalg.norm(d)))
    return out


def test_centroid_hit_interpolates_uv():
    mesh = right_triangle()
    c = np.array([1 / 3, 1 / 3, 0.0])
    hit = intersect_mesh(Ray(c + [0, 0, 5], (0, 0, -1)), mesh)
    np.testing.assert_allclose(hit.barycentric, [1 / 3, 1 / 3, 1 / 3], atol=1e-12)
    np.testing.assert_allclose(hit.uv, [1 / 3, 1 / 3], atol=1e-12)
    assert hit.t == pytest.approx(5.0)
    assert hit.entering


def test_coplanar_ray_misses():
    mesh = right_triangle()
    assert intersect_mesh(Ray((-1.0, 0.25, 0.0), (1, 0, 0)), mesh) is None


def test_miss_outside_triangle():
    assert intersect_mesh(Ray((0.8, 0.8, 1.0), (0, 0, -1)), right_triangle()) is None


def test_degenerate_and_out_of_range_triangles_rejected():
    v = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
    with pytest.raises(InvalidPrimitiveError):
        TriangleMesh(v, [[0, 1, 2]])
    with pytest.raises(InvalidPrimitiveError):
        TriangleMesh(v, [[0, 1, 3]])


def test_bvh_matches_scan_on_10k_relief():
    mesh = relief(10_000)
    assert 9_000 <= len(mesh) <= 11_000
    compare_with_scan(mesh, random_rays(np.random.default_rng(3), 1000))


def test_bvh_matches_scan_on_100k_triangles():
    mesh = relief(100_000)
    assert len(mesh) >= 95_000
    compare_with_scan(mesh, random_rays(np.random.default_rng(4), 200))


def test_shared_edge_hit_is_deterministic():
    # a ray through the diagonal shared by two triangles of a quad
    v = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    mesh = TriangleMesh(v, [[0, 1, 2], [0, 2, 3]])
    hit = intersect_mesh(Ray((0.5, 0.5, 3.0), (0, 0, -1)), mesh)
    assert hit is not None and hit.primitive_id == 0


def test_closed_mesh_is_watertight():
    mesh = uv_ellipsoid((0, 0, 0), (3.0, 2.0, 2.5), n_lat=16, n_lon=32)
    rng = np.random.default_rng(5)
    n = 20_000
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    origins = d * 10.0
    targets = rng.uniform(-3, 3, (n, 3))
    dirs = targets - origins
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    counts = count_mesh_crossings(origins, dirs, mesh.triangles)
    assert np.all(counts % 2 == 0)
    assert np.count_nonzero(counts) > n // 2


def test_obj_round_trip_and_fan_triangulation():
    text = """# a unit square as one quad
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vt 0 0
vt 1 0
vt 1 1
vt 0 1
f 1/1 2/2 3/3 4/4
"""
    mesh = parse_obj(text)
    assert len(mesh) == 2
    again = parse_obj(dump_obj(mesh))
    np.testing.assert_array_equal(again.vertices, mesh.vertices)
    np.testing.assert_array_equal(again.faces, mesh.faces)
    np.testing.assert_array_equal(again.uvs, mesh.uvs)


def test_obj_negative_indices():
    mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
    assert len(mesh) == 1


@pytest.mark.parametrize("text", [
    "v 0 0 0\nv 1 0 0\nf 1 2 3\n",
    "v 0 0\n",
    "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n",
    "v a b c\n",
    "# nothing\n",
])
def test_obj_errors(text):
    with pytest.raises(ObjFormatError):
        parse_obj(text)
