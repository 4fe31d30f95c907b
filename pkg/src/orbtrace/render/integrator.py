"""Tile-parallel driver around the numba kernel."""
from __future__ import annotations

import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .film import Film
from .kernel import ERR_STACK_OVERFLOW, ERR_STACK_UNDERFLOW, render_pixels
from .settings import RenderSettings

log = logging.getLogger(__name__)

THREADS_ENV = "ORBTRACE_THREADS"
TILE = 32


class RenderError(RuntimeError):
    """Geometry inconsistency or (in strict mode) non-finite radiance."""

    def __init__(self, message: str, pixel=None, primitive=None):
        super().__init__(message)
        self.pixel = pixel
        self.primitive = primitive


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _tiles(width: int, height: int, mask: Optional[np.ndarray]):
    """Pixel lists in row-major tile order, skipping pixels outside ``mask``."""
    out = []
    for y0 in range(0, height, TILE):
        for x0 in range(0, width, TILE):
            ys, xs = np.mgrid[y0:min(y0 + TILE, height), x0:min(x0 + TILE, width)]
            xs, ys = xs.ravel(), ys.ravel()
            if mask is not None:
                keep = mask[ys, xs]
                xs, ys = xs[keep], ys[keep]
            if len(xs):
                out.append((xs.astype(np.int64), ys.astype(np.int64)))
    return out


class InvalidExperimentError(ValueError):
    """The requested experiment does not apply to the scene."""


def birefringent_render_pair(config, calcite, settings: Optional[RenderSettings] = None,
                             **render_kwargs) -> Film:
    """Mean of two renders of a solid orb, one per calcite refractive index.

    Both renders use the same seed; the average is taken in linear radiance.
    """
    from ..scene.config import replace_orb

    if not config.orb.present or not config.orb.solid:
        raise InvalidExperimentError("the calcite comparison needs a solid orb")
    films = [render(replace_orb(config, material=calcite.as_dielectric(which)), settings, **render_kwargs)
             for which in ("ordinary", "extraordinary")]
    films[0].merge(films[1])
    films[0].elapsed = films[0].elapsed + films[1].elapsed
    return films[0]


def render(scene, settings: Optional[RenderSettings] = None, *, mask=None,
           workers: Optional[int] = None, progress: bool = False) -> Film:
    """Path-trace ``scene`` (a :class:`Scene` or :class:`SceneConfig`).

    ``mask`` is an optional boolean (H, W) array restricting which pixels
    are traced. The result is identical for any ``workers`` count. A calcite
    orb is rendered through :func:`birefringent_render_pair`.
    """
    from ..optics import CalciteSpec
    from ..scene.build import Scene, build_scene

    config = scene.config if isinstance(scene, Scene) else scene
    if isinstance(config.orb.material, CalciteSpec) and config.orb.present:
        return birefringent_render_pair(config, config.orb.material, settings, mask=mask,
                                        workers=workers, progress=progress)
    if not isinstance(scene, Scene):
        scene = build_scene(scene)
    settings = settings or scene.config.render
    cam = scene.camera
    film = Film(cam.width, cam.height, settings.gamma)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != film.shape:
            raise ValueError(f"mask shape {mask.shape} does not match image {film.shape}")
    tiles = _tiles(cam.width, cam.height, mask)
    workers = workers or default_workers()
    sc = scene.kernel
    spp, depth, seed = settings.samples_per_pixel, settings.max_depth, settings.seed
    total = len(tiles)

    def run(tile):
        xs, ys = tile
        out = np.zeros((len(xs), 3))
        status = np.zeros(7, dtype=np.int64)
        render_pixels(sc, xs, ys, spp, depth, seed, out, status)
        return out, status

    t0 = time.perf_counter()
    done = 0
    bad_samples = 0
    first_bad = None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for (xs, ys), (out, status) in zip(tiles, pool.map(run, tiles)):
            if status[0] != 0:
                what = {ERR_STACK_UNDERFLOW: "medium stack underflow",
                        ERR_STACK_OVERFLOW: "medium stack overflow"}.get(int(status[0]), "geometry error")
                pool.shutdown(cancel_futures=True)
                raise RenderError(f"{what} at pixel ({status[1]}, {status[2]}), sphere {status[3]}",
                                  pixel=(int(status[1]), int(status[2])), primitive=int(status[3]))
            if status[4]:
                bad_samples += int(status[4])
                if first_bad is None:
                    first_bad = (int(status[5]), int(status[6]))
                if settings.strict:
                    pool.shutdown(cancel_futures=True)
                    raise RenderError(f"non-finite radiance at pixel {first_bad}", pixel=first_bad)
            film.add(xs, ys, out, spp)
            done += 1
            if progress:
                print(f"\rrender {100 * done // total:3d}%", end="", file=sys.stderr, flush=True)
    if progress:
        print(file=sys.stderr)
    if bad_samples:
        log.warning("dropped %d non-finite samples (first at pixel %s)", bad_samples, first_bad)
    film.elapsed = time.perf_counter() - t0
    return film
