import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbtrace.scene.build import build_scene
from orbtrace.scene.camera import Camera, fit_circle
from orbtrace.scene.config import (CameraSpec, LightRig, OrbSpec, ReliefSpec, SceneConfig, cone_directions,
                                   orb_center_world, relief_plane_z, replace_orb)
from orbtrace.scene.generators import (AlignmentError, align_view, make_salvator_scene, make_three_lines_scene,
                                       project_relief_point, projected_fold_segments,
                                       projected_orb_center_on_relief, projected_stroke_segments,
                                       relief_silhouette_radius)


def point_line_distance(p, a, b):
    d = (b - a) / np.linalg.norm(b - a)
    v = p - a
    return abs(v[0] * d[1] - v[1] * d[0])


def convergence_world(config):
    u, v = config.relief.convergence
    return np.array([u, v, relief_plane_z(config)])


# --- default composition ----------------------------------------------------


def test_default_composition():
    config = make_salvator_scene()
    assert config == SceneConfig()
    assert config.orb.radius == 6.8 and config.orb.thickness == pytest.approx(0.13)
    assert config.relief.distance == 25.0
    eye = np.asarray(config.camera.position)
    assert eye[2] - relief_plane_z(config) == pytest.approx(90.0)
    assert np.allclose(config.camera.look_at, (0.0, 0.0, -25.0))
    assert sum(f.exempt for f in config.relief.folds) == 1
    assert config.relief.folds[-1].exempt and config.relief.folds[-1].shadow_width > 0


def test_default_scene_overrides():
    solid = make_salvator_scene({"orb.thickness": "solid"})
    assert solid.orb.solid
    shifted = make_salvator_scene({"orb.lateral_shift_cm": 1.0})
    assert shifted.orb.lateral_shift == 1.0
    # a shift to the viewer's left moves the projected centre left
    c0 = Camera(shifted.camera).project(orb_center_world(SceneConfig()))
    c1 = Camera(shifted.camera).project(orb_center_world(shifted))
    assert c1[0] < c0[0] - 10


def test_non_exempt_folds_pass_through_projected_orb_centre():
    config = make_salvator_scene()
    centre_uv = projected_orb_center_on_relief(config)
    for (p, d), f in zip(config.relief.fold_lines(), config.relief.folds):
        dist = abs((centre_uv - p)[0] * d[1] - (centre_uv - p)[1] * d[0])
        if f.exempt:
            assert dist > 0.5
        else:
            assert dist < 1e-6
    # and in the image
    centre_px = Camera(config.camera).project(orb_center_world(config))
    for (a, b), f in zip(projected_fold_segments(config), config.relief.folds):
        if not f.exempt:
            assert point_line_distance(centre_px, a, b) < 1e-6


def test_non_exempt_offset_fold_is_rejected():
    from orbtrace.scene.config import FoldSpec

    with pytest.raises(ValueError):
        ReliefSpec(folds=(FoldSpec(angle=10.0, offset=0.5),))


def test_orb_validation():
    with pytest.raises(ValueError):
        OrbSpec(radius=0.0)
    with pytest.raises(ValueError):
        OrbSpec(thickness=0.0)
    with pytest.raises(ValueError):
        OrbSpec(thickness=7.0)
    with pytest.raises(ValueError):
        CameraSpec(vertical_fov=0.5)
    with pytest.raises(ValueError):
        CameraSpec(up=(0.0, 0.0, 1.0))


# --- lights -----------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(count=st.integers(1, 12), half=st.floats(0.0, 20.0))
def test_total_main_light_is_independent_of_direction_count(count, half):
    rig = LightRig(main_directions=cone_directions(60.0, -20.0, half, count))
    assert len(rig.main_directions) == count
    np.testing.assert_allclose(rig.per_direction_radiance * count, rig.main_radiance, rtol=1e-12)
    for d in rig.main_directions:
        assert math.hypot(*d) == pytest.approx(1.0, abs=1e-12)


def test_default_light_rig():
    rig = LightRig()
    assert len(rig.main_directions) == 5
    main = np.asarray(rig.main_directions[0])
    assert math.degrees(math.asin(main[1])) == pytest.approx(60.0)
    for d in rig.main_directions[1:]:
        assert math.degrees(math.acos(np.clip(np.dot(main, d), -1, 1))) == pytest.approx(5.0)
    lum = np.array([0.2126, 0.7152, 0.0722])
    assert np.dot(lum, rig.ambient_radiance) < np.dot(lum, rig.main_radiance)
    with pytest.raises(ValueError):
        cone_directions(60.0, 0.0, 5.0, 0)


# --- camera -----------------------------------------------------------------


def test_projection_inverts_ray_direction():
    cam = Camera(CameraSpec(position=(3.0, -2.0, 40.0), look_at=(0.0, 1.0, 0.0), width=640, height=480))
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(0, [640, 480], (50, 2)):
        p = cam.position + 17.0 * cam.ray_direction(x, y)
        np.testing.assert_allclose(cam.project(p), (x, y), atol=1e-9)
    with pytest.raises(ValueError):
        cam.project(cam.position - cam.forward)


def test_default_silhouette_is_centred():
    scene = build_scene(SceneConfig())
    circle = scene.orb_silhouette()
    assert (circle.cx, circle.cy) == (pytest.approx(512.0, abs=1e-9), pytest.approx(512.0, abs=1e-9))
    # half-angle of the tangent cone against the half field of view
    expected = 512.0 * math.tan(math.asin(6.8 / 65.0)) / math.tan(math.radians(15.0))
    assert circle.r == pytest.approx(expected, rel=1e-9)


def test_fit_circle_exact():
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    c = fit_circle(np.column_stack([3 + 7 * np.cos(t), -2 + 7 * np.sin(t)]))
    assert (c.cx, c.cy, c.r) == pytest.approx((3.0, -2.0, 7.0))


# --- alignment --------------------------------------------------------------


def test_align_view_fixed_point():
    config = SceneConfig()
    assert align_view(config) is config


def test_align_view_after_shift_restores_collinearity():
    shifted = replace_orb(SceneConfig(), lateral_shift=1.0)
    aligned = align_view(shifted)
    assert aligned.orb == shifted.orb and aligned.relief == shifted.relief
    eye = np.asarray(aligned.camera.position)
    c = orb_center_world(aligned)
    p = convergence_world(aligned)
    u = (c - eye) / np.linalg.norm(c - eye)
    w = p - eye
    assert np.linalg.norm(w - np.dot(w, u) * u) < 1e-9
    cam = Camera(aligned.camera)
    np.testing.assert_allclose(cam.project(c), cam.project(p), atol=1e-9)
    # the orb stays put relative to the relief; only the camera moved
    assert np.linalg.norm(np.subtract(aligned.camera.position, shifted.camera.position)) > 0.5
    assert align_view(aligned) == aligned


@settings(max_examples=50, deadline=None)
@given(shift=st.floats(-3, 3), u=st.floats(-2, 2), v=st.floats(-2, 2))
def test_align_view_idempotent(shift, u, v):
    config = replace(replace_orb(SceneConfig(), lateral_shift=shift),
                     relief=replace(SceneConfig().relief, convergence=(u, v)))
    once = align_view(config)
    assert align_view(once) == once


def test_align_view_errors():
    config = SceneConfig()
    with pytest.raises(AlignmentError):
        align_view(config, convergence=(math.inf, 0.0))
    with pytest.raises(AlignmentError):
        align_view(replace(config, relief=replace(config.relief, convergence=None, folds=())))
    # convergence far off-axis puts the orb outside the view after the move
    with pytest.raises(AlignmentError):
        align_view(config, convergence=(80.0, 0.0))


# --- three lines ------------------------------------------------------------


def test_three_lines_stage():
    config = make_three_lines_scene()
    cam = Camera(config.camera)
    centre = cam.project(orb_center_world(config))
    segs = projected_stroke_segments(config)
    assert len(segs) == 3
    dists = sorted(point_line_distance(centre, a, b) for a, b in segs)
    assert dists[0] < 1e-9
    assert dists[1] == pytest.approx(dists[2])
    assert dists[1] > 10
    assert not config.hand.enabled and config.relief.folds == ()


def test_bent_middle_line_misses_centre_inside_the_disk():
    straight = make_three_lines_scene()
    bent = make_three_lines_scene(bend_middle=True)
    cam = Camera(bent.camera)
    circle = build_scene(bent).orb_silhouette()
    centre = np.array([circle.cx, circle.cy])
    a, b = projected_stroke_segments(bent)[1]
    assert point_line_distance(centre, a, b) > 5
    # the kink lies outside the silhouette
    kink = bent.relief.strokes[1].points[1]
    assert np.linalg.norm(project_relief_point(bent, kink) - centre) > circle.r
    assert math.degrees(math.atan2(abs((b - a)[0]), abs((b - a)[1]))) == pytest.approx(10.0, abs=1e-6)
    assert straight.relief.strokes[0] == bent.relief.strokes[0]
    del cam


def test_three_lines_validation():
    with pytest.raises(ValueError):
        make_three_lines_scene(line_spacing=0.0)
    with pytest.raises(ValueError):
        make_three_lines_scene(bend_middle=True, kink_radius=0.5)


def test_silhouette_radius_on_relief():
    config = make_three_lines_scene()
    eye = np.asarray(config.camera.position)
    r = relief_silhouette_radius(config)
    # a point on the relief at that radius is seen exactly along a tangent to the orb
    p = np.array([r, 0.0, relief_plane_z(config)])
    d = (p - eye) / np.linalg.norm(p - eye)
    c = orb_center_world(config)
    closest = np.linalg.norm((c - eye) - np.dot(c - eye, d) * d)
    assert closest == pytest.approx(config.orb.radius, rel=1e-12)


def test_build_solid_has_one_sphere_and_hollow_two():
    assert build_scene(replace_orb(SceneConfig(), thickness=6.8)).kernel.sph.shape[0] == 1
    assert build_scene(SceneConfig()).kernel.sph.shape[0] == 2
    assert build_scene(replace_orb(SceneConfig(), present=False)).kernel.sph.shape[0] == 0
