import dataclasses
import logging

import numpy as np
import pytest

from orbtrace.imageio import encode_gamma, parse_ppm, ppm_bytes, read_rgb8
from orbtrace.optics import CalciteSpec, DielectricSpec
from orbtrace.render import Film, InvalidExperimentError, RenderError, RenderSettings, birefringent_render_pair, \
    render, write_image
from orbtrace.scene.build import build_scene
from orbtrace.scene.config import (HandSpec, LightRig, ReliefSpec, SceneConfig, replace_camera, replace_orb,
                                   replace_render)
from oracles import lambert_pixel


def small(config, size=48, spp=4, seed=0):
    return replace_render(replace_camera(config, width=size, height=size), samples_per_pixel=spp, seed=seed)


def bare_plane(light_dir, radiance, albedo, ambient=(0.0, 0.0, 0.0)):
    return SceneConfig(
        orb=replace_orb(SceneConfig(), present=False).orb,
        lights=LightRig(main_directions=(light_dir,), main_radiance=radiance, ambient_radiance=ambient),
        relief=ReliefSpec(albedo=albedo, folds=(), bands=(), strokes=(), convergence=None),
        hand=HandSpec(enabled=False),
    )


def test_no_light_gives_black():
    config = bare_plane((0.0, 0.0, 1.0), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    film = render(small(config), workers=1)
    assert np.all(film.mean() == 0.0)
    assert np.all(film.to_rgb8() == 0)


def test_lambertian_plane_matches_closed_form():
    light = np.array([0.0, 0.6, 0.8])
    radiance = np.array([2.0, 1.0, 0.5])
    albedo = np.array([0.8, 0.6, 0.4])
    config = bare_plane(tuple(light), tuple(radiance), tuple(albedo))
    film = render(small(config, spp=2), workers=1)
    expected = [lambert_pixel(albedo[c], radiance[c], light, np.array([0.0, 0.0, 1.0])) for c in range(3)]
    np.testing.assert_allclose(film.mean(), np.broadcast_to(expected, film.mean().shape), rtol=1e-12)
    # albedo 1 facing the light: incident radiance over pi
    film = render(small(bare_plane((0.0, 0.0, 1.0), (1.0, 1.0, 1.0), (1.0, 1.0, 1.0)), spp=1), workers=1)
    np.testing.assert_allclose(film.mean(), 1.0 / np.pi, rtol=1e-12)


def test_white_furnace():
    # an untinted hollow shell alone inside a unit environment
    config = replace_orb(SceneConfig(hand=HandSpec(enabled=False)), material=DielectricSpec(tint=(1, 1, 1)))
    config = dataclasses.replace(config, lights=LightRig(main_directions=((0.0, 1.0, 0.0),),
                                                         main_radiance=(0.0, 0.0, 0.0),
                                                         ambient_radiance=(1.0, 1.0, 1.0)))
    config = small(config, size=32, spp=256, seed=3)
    scene = build_scene(config)
    scene = dataclasses.replace(scene, kernel=scene.kernel._replace(quads=np.zeros((0, 16))))
    film = render(scene, workers=1)
    circle = scene.orb_silhouette()
    yy, xx = np.mgrid[0:32, 0:32] + 0.5
    inside = (xx - circle.cx) ** 2 + (yy - circle.cy) ** 2 < circle.r ** 2
    assert inside.sum() > 50
    mean = film.mean()
    assert abs(mean.mean() - 1.0) <= 0.005
    assert abs(mean[inside].mean() - 1.0) <= 0.005


@pytest.mark.parametrize("workers", [4, 8])
def test_thread_count_does_not_change_bytes(workers):
    config = small(SceneConfig(), size=96, spp=4, seed=17)
    ref = ppm_bytes(render(config, workers=1).to_rgb8())
    assert ppm_bytes(render(config, workers=workers).to_rgb8()) == ref


def test_seed_changes_noise():
    a = render(small(SceneConfig(), size=32, seed=1), workers=1).mean()
    b = render(small(SceneConfig(), size=32, seed=2), workers=1).mean()
    assert not np.array_equal(a, b)


def test_mask_restricts_traced_pixels():
    config = small(SceneConfig(), size=32)
    mask = np.zeros((32, 32), dtype=bool)
    mask[8:16, 4:30] = True
    film = render(config, mask=mask, workers=2)
    assert np.array_equal(film.rendered, mask)
    full = render(config, workers=1)
    np.testing.assert_array_equal(film.mean()[mask], full.mean()[mask])
    with pytest.raises(ValueError):
        render(config, mask=np.ones((5, 5), dtype=bool))


def non_finite_scene():
    config = small(bare_plane((0.0, 0.0, 1.0), (1.0, 1.0, 1.0), (1.0, 1.0, 1.0)), size=8, spp=1)
    scene = build_scene(config)
    light = scene.kernel.light.copy()
    light[0] = np.inf
    return config, dataclasses.replace(scene, kernel=scene.kernel._replace(light=light))


def test_strict_mode_fails_fast_on_non_finite_radiance():
    config, scene = non_finite_scene()
    with pytest.raises(RenderError) as info:
        render(scene, RenderSettings(samples_per_pixel=1, strict=True), workers=1)
    assert info.value.pixel is not None


def test_non_strict_mode_drops_and_warns(caplog):
    config, scene = non_finite_scene()
    with caplog.at_level(logging.WARNING):
        film = render(scene, RenderSettings(samples_per_pixel=1), workers=1)
    assert "non-finite" in caplog.text
    assert np.all(np.isfinite(film.mean()))


def test_camera_inside_orb_is_a_geometry_error():
    config = small(replace_orb(SceneConfig(), center=(0.0, 0.0, 63.0), thickness=6.8), size=8, spp=1)
    with pytest.raises(RenderError) as info:
        render(config, workers=1)
    assert info.value.primitive == 0
    assert "underflow" in str(info.value)


def test_settings_validation():
    for bad in (dict(samples_per_pixel=0), dict(max_depth=4), dict(seed=-1), dict(gamma=0.0)):
        with pytest.raises(ValueError):
            RenderSettings(**bad)


def test_film_rejects_bad_radiance():
    film = Film(2, 2)
    with pytest.raises(ValueError):
        film.add(np.array([0]), np.array([0]), np.array([[-1.0, 0.0, 0.0]]), 1)
    with pytest.raises(ValueError):
        film.add(np.array([0]), np.array([0]), np.array([[np.nan, 0.0, 0.0]]), 1)
    with pytest.raises(ValueError):
        film.merge(Film(3, 2))


def test_encoding_values(tmp_path):
    assert encode_gamma(np.array([0.0, 0.5, 1.0, 2.0])).tolist() == [0, 186, 255, 255]
    assert round(255 * 0.5 ** (1 / 2.2)) == 186
    for value, byte in ((1.0, 255), (0.0, 0), (0.5, 186)):
        film = Film(1, 1)
        film.add(np.array([0]), np.array([0]), np.array([[value] * 3]), 1)
        path = tmp_path / "p.ppm"
        write_image(film, path)
        data = path.read_bytes()
        assert data == b"P6\n1 1\n255\n" + bytes([byte] * 3)
        assert parse_ppm(data).tolist() == [[[byte] * 3]]


def test_png_round_trip(tmp_path):
    rgb = np.random.default_rng(0).integers(0, 256, (7, 5, 3), dtype=np.uint8)
    film = Film(5, 7)
    ys, xs = np.mgrid[0:7, 0:5]
    film.add(xs.ravel(), ys.ravel(), ((rgb / 255.0) ** 2.2).reshape(-1, 3), 1)
    write_image(film, tmp_path / "a.png")
    write_image(film, tmp_path / "a.ppm")
    np.testing.assert_array_equal(read_rgb8(tmp_path / "a.png"), read_rgb8(tmp_path / "a.ppm"))
    np.testing.assert_array_equal(read_rgb8(tmp_path / "a.png"), rgb)
    with pytest.raises(ValueError):
        write_image(film, tmp_path / "a.bmp")


# --- calcite pair -----------------------------------------------------------


def solid(config, material):
    return replace_orb(config, thickness=config.orb.radius, material=material)


def test_equal_indices_reproduce_a_single_render():
    base = small(SceneConfig(), size=32)
    pair = birefringent_render_pair(solid(base, DielectricSpec()), CalciteSpec(1.6, 1.6), workers=1)
    single = render(solid(base, DielectricSpec(ior=1.6)), workers=1)
    np.testing.assert_array_equal(pair.mean(), single.mean())


def test_pair_is_the_linear_mean():
    base = small(SceneConfig(), size=32)
    calcite = CalciteSpec()
    pair = render(solid(base, calcite), workers=1)
    o = render(solid(base, DielectricSpec(ior=calcite.ior_ordinary)), workers=1).mean()
    e = render(solid(base, DielectricSpec(ior=calcite.ior_extraordinary)), workers=1).mean()
    np.testing.assert_allclose(pair.mean(), 0.5 * (o + e), rtol=1e-12, atol=1e-15)


def test_pair_of_black_scene_is_black():
    config = solid(small(bare_plane((0.0, 0.0, 1.0), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), size=16),
                   DielectricSpec())
    config = replace_orb(config, present=True)
    assert np.all(birefringent_render_pair(config, CalciteSpec(), workers=1).mean() == 0.0)


def test_pair_needs_a_solid_orb():
    with pytest.raises(InvalidExperimentError):
        birefringent_render_pair(small(SceneConfig(), size=8), CalciteSpec(), workers=1)
