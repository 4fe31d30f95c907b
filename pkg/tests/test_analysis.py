import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbtrace.analysis import (NoConvergenceError, detect_inversion, fit_fold_convergence, image_rmse,
                               interior_mask, measure_line_continuity)
from orbtrace.analysis.contours import detect_double_contour, find_tracks
from orbtrace.analysis.continuity import window_half_width
from orbtrace.analysis.image import segment_mask
from orbtrace.render import render
from orbtrace.scene.build import build_scene
from orbtrace.scene.camera import Circle
from orbtrace.scene.config import replace_camera, replace_orb, replace_render
from orbtrace.scene.generators import make_three_lines_scene, projected_stroke_segments

SIZE = 512
CIRCLE = Circle(256.0, 256.0, 150.0)


def pixel_grid(size=SIZE):
    y, x = np.mgrid[0:size, 0:size]
    return x + 0.5, y + 0.5


def draw_vertical_line(x_out, jump, sigma=1.5, depth=0.8, background=0.5, circle=CIRCLE):
    """Dark vertical line at ``x_out`` that sits ``jump`` px further right inside the circle."""
    x, y = pixel_grid()
    inside = np.hypot(x - circle.cx, y - circle.cy) < circle.r
    centre = np.where(inside, x_out + jump, x_out)
    return background * (1.0 - depth * np.exp(-0.5 * ((x - centre) / sigma) ** 2))


def vertical_segment(x):
    return ((x, 1.0), (x, SIZE - 1.0))


# --- continuity -------------------------------------------------------------


def test_synthetic_three_pixel_jump():
    image = draw_vertical_line(256.0 + 40.0, 3.0)
    report = measure_line_continuity(image, CIRCLE, [vertical_segment(296.0)])
    line = report.lines[0]
    assert line.status == "ok"
    assert line.displacement_px == pytest.approx(3.0, abs=0.2)
    assert not line.connected


def test_straight_line_is_connected():
    image = draw_vertical_line(256.0 + 40.0, 0.0)
    line = measure_line_continuity(image, CIRCLE, [vertical_segment(296.0)]).lines[0]
    assert line.displacement_px < 0.1
    assert line.connected and not line.curvature_flag


def test_line_cut_off_inside_is_reported_as_broken():
    x, y = pixel_grid()
    image = draw_vertical_line(296.0, 0.0)
    image[np.hypot(x - 256, y - 256) < 150] = 0.5
    line = measure_line_continuity(image, CIRCLE, [vertical_segment(296.0)]).lines[0]
    assert line.status == "ok"
    assert line.displacement_px >= 0.85 * 0.13 * 150 - 1


def test_undetectable_line_fails_loudly():
    image = np.full((SIZE, SIZE), 0.5)
    line = measure_line_continuity(image, CIRCLE, [vertical_segment(296.0)]).lines[0]
    assert line.status == "failed" and np.isnan(line.displacement_px)
    assert "contrast" in line.message
    miss = measure_line_continuity(image, CIRCLE, [vertical_segment(500.0)]).lines[0]
    assert miss.status == "failed"


def test_silhouette_must_fit_in_image():
    with pytest.raises(ValueError):
        measure_line_continuity(np.ones((64, 64)), Circle(10.0, 10.0, 20.0), [])


@settings(max_examples=20, deadline=None)
@given(gamma=st.floats(0.3, 3.0), scale=st.floats(0.05, 1.0), jump=st.floats(0.0, 4.0))
def test_displacement_invariant_under_gamma_and_brightness(gamma, scale, jump):
    image = draw_vertical_line(296.0, jump)
    a = measure_line_continuity(image, CIRCLE, [vertical_segment(296.0)]).lines[0]
    b = measure_line_continuity(scale * image ** gamma, CIRCLE, [vertical_segment(296.0)]).lines[0]
    assert b.displacement_px == pytest.approx(a.displacement_px, abs=1e-6)


def test_window_floor():
    assert window_half_width(10.0) == 4.0
    assert window_half_width(201.0) == pytest.approx(16.08)


def test_no_orb_render_has_no_displacement():
    # only the crossing windows are traced, at a sample count where noise stays well under 0.1 px
    config = make_three_lines_scene()
    config = replace_render(replace_camera(config, width=384, height=384), samples_per_pixel=256, seed=1)
    circle = build_scene(config).orb_silhouette()
    segs = projected_stroke_segments(config)
    mask = segment_mask((384, 384), segs, window_half_width(circle.r) + 6, circle, (0.8, 1.2))
    film = render(replace_orb(config, present=False), mask=mask)
    report = measure_line_continuity(film.mean(), circle, segs)
    assert all(ln.status == "ok" for ln in report.lines)
    assert report.max_displacement < 0.1


# --- convergence ------------------------------------------------------------


def rays_from(point, angles, rng, sigma, n=30, near=60.0, far=260.0):
    out = []
    for a in angles:
        d = np.array([np.cos(a), np.sin(a)])
        t = np.linspace(near, far, n)
        pts = point + t[:, None] * d
        out.append(pts + rng.normal(0.0, sigma, pts.shape))
    return out


def test_convergence_monte_carlo():
    rng = np.random.default_rng(8)
    point = np.array([512.0, 512.0])
    worst = 0.0
    for _ in range(100):
        angles = rng.uniform(0, 2 * np.pi, 4)
        angles = np.sort(angles)
        if np.min(np.diff(np.r_[angles, angles[0] + 2 * np.pi])) < 0.3:
            angles = np.deg2rad([20, 110, 200, 290]) + rng.uniform(0, 1)
        fit = fit_fold_convergence(rays_from(point, angles, rng, 0.5))
        worst = max(worst, float(np.linalg.norm(fit.point - point)))
    assert worst < 1.5


def test_two_exact_lines_meet_exactly():
    p = np.array([3.25, -7.5])
    fit = fit_fold_convergence(rays_from(p, [0.3, 1.9], np.random.default_rng(0), 0.0))
    np.testing.assert_allclose(fit.point, p, atol=1e-9)
    assert fit.rms_residual < 1e-9 and fit.outliers == []


def test_parallel_lines_raise():
    a = np.column_stack([np.arange(20.0), np.zeros(20)])
    with pytest.raises(NoConvergenceError):
        fit_fold_convergence([a, a + [0.0, 5.0]])


def test_convergence_needs_enough_samples():
    with pytest.raises(ValueError):
        fit_fold_convergence([np.zeros((5, 2)), np.ones((20, 2))])
    with pytest.raises(ValueError):
        fit_fold_convergence([np.zeros((20, 2))])


def test_stray_fold_is_flagged():
    rng = np.random.default_rng(2)
    point = np.array([400.0, 300.0])
    samples = rays_from(point, np.deg2rad([15, 40, 70, 100]), rng, 0.2)
    stray = rays_from(point + [0.0, 25.0], np.deg2rad([160]), rng, 0.2)
    fit = fit_fold_convergence(samples + stray)
    assert fit.outliers == [4]
    assert np.linalg.norm(fit.point - point) < 0.5


@settings(max_examples=30, deadline=None)
@given(dx=st.floats(-500, 500), dy=st.floats(-500, 500))
def test_convergence_translation_equivariance(dx, dy):
    rng = np.random.default_rng(4)
    samples = rays_from(np.array([100.0, 80.0]), np.deg2rad([10, 80, 150, 230]), rng, 0.5)
    base = fit_fold_convergence(samples)
    moved = fit_fold_convergence([s + [dx, dy] for s in samples])
    np.testing.assert_allclose(moved.point - base.point, [dx, dy], atol=1e-7)
    assert moved.outliers == base.outliers


# --- inversion --------------------------------------------------------------


def textured_background():
    x, y = pixel_grid()
    phi = np.arctan2(y - 256, x - 256)
    r = np.hypot(x - 256, y - 256)
    return 0.4 + 0.15 * np.sin(phi) + 0.1 * np.cos(2 * phi + 0.4) + 0.05 * np.sin(0.05 * r)


def point_reflect_disk(image, circle=CIRCLE):
    out = image.copy()
    x, y = pixel_grid()
    inside = np.hypot(x - circle.cx, y - circle.cy) < circle.r
    ys, xs = np.nonzero(inside)
    out[ys, xs] = image[SIZE - 1 - ys, SIZE - 1 - xs]
    return out


def test_inverted_disk_scores_positive():
    bg = textured_background()
    res = detect_inversion(point_reflect_disk(bg), bg, CIRCLE)
    assert res.status == "ok" and res.score > 0.5


def test_identical_images_do_not_invert():
    bg = textured_background()
    assert detect_inversion(bg, bg, CIRCLE).score <= 0.0


def test_inversion_antisymmetry():
    bg = textured_background()
    rng = np.random.default_rng(1)
    seen = bg * (0.8 + 0.1 * rng.random(bg.shape))
    s1 = detect_inversion(seen, bg, CIRCLE).score
    s2 = detect_inversion(point_reflect_disk(seen), bg, CIRCLE).score
    assert abs(s1 + s2) <= 0.05


def test_textureless_background_is_indeterminate():
    flat = np.full((SIZE, SIZE), 0.3)
    res = detect_inversion(flat, flat, CIRCLE)
    assert res.status == "indeterminate" and np.isnan(res.score)
    with pytest.raises(ValueError):
        detect_inversion(flat, flat[:10], CIRCLE)


# --- rmse -------------------------------------------------------------------


def test_rmse():
    a = np.random.default_rng(0).random((8, 8, 3))
    assert image_rmse(a, a) == 0.0
    assert image_rmse(np.zeros((4, 4, 3)), np.ones((4, 4, 3))) == 1.0
    black = np.zeros((4, 4, 3), dtype=np.uint8)
    white = np.full((4, 4, 3), 255, dtype=np.uint8)
    assert image_rmse(black, white) == 1.0
    with pytest.raises(ValueError):
        image_rmse(a, a, np.zeros((8, 8), dtype=bool))
    with pytest.raises(ValueError):
        image_rmse(a, a[:4])


def test_interior_mask_excludes_band_and_highlights():
    bg = np.full((SIZE, SIZE), 0.3)
    img = bg.copy()
    img[250:254, 250:254] = 0.9
    mask = interior_mask(img, bg, CIRCLE)
    assert not mask[251, 251]
    x, y = pixel_grid()
    r = np.hypot(x - 256, y - 256)
    assert not mask[(r > 147.5) & (r < 150)].any()
    assert mask[(r < 140)].sum() > 0.99 * (r < 140).sum() - 16


# --- double contours --------------------------------------------------------


def lines_image(offsets, sigma=1.5, depth=0.6):
    x, _ = pixel_grid()
    img = np.full((SIZE, SIZE), 0.6)
    for o in offsets:
        img *= 1.0 - depth * np.exp(-0.5 * ((x - 256 - o) / sigma) ** 2)
    return img


EXPECTED = [vertical_segment(256.0 - 60), vertical_segment(256.0), vertical_segment(256.0 + 60)]


def test_single_imaging_is_not_a_double_contour():
    res = detect_double_contour(lines_image([-60, 0, 60]), CIRCLE, EXPECTED)
    assert res.tracks_per_side == (1, 1) and not res.detected


def test_two_copies_per_line_are_a_double_contour():
    res = detect_double_contour(lines_image([-82, -60, 0, 60, 82]), CIRCLE, EXPECTED)
    assert res.lines_per_side == (1, 1)
    assert res.tracks_per_side == (2, 2) and res.detected
    np.testing.assert_allclose(find_tracks(lines_image([-82, -60, 0, 60, 82]), CIRCLE, (0, 1)).offsets,
                               [-82, -60, 0, 60, 82], atol=0.3)
