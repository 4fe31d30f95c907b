"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 render error, 4 experiment predicate failed.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import EXPERIMENT_IDS, METRICS, ExperimentOptions, evaluate_metric, run_experiment, \
    write_results
from .imageio import read_rgb8
from .render import RenderError, render, write_image
from .render.integrator import THREADS_ENV
from .scene.config import SceneConfig, replace_orb
from .scene.format import SCHEMA, SceneFormatError, apply_overrides, load_scene, serialize_scene, split_key
from .scene.generators import make_three_lines_scene

EXIT_OK, EXIT_INPUT, EXIT_RENDER, EXIT_PREDICATE = 0, 2, 3, 4

BUILTIN_SCENES = {
    "default": SceneConfig,
    "three_lines": lambda: make_three_lines_scene(),
    "three_lines_bent": lambda: make_three_lines_scene(bend_middle=True),
}


class InputError(Exception):
    pass


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


def _load(path: str, overrides, spp=None, seed=None) -> SceneConfig:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"scene file not found: {path}")
    config = load_scene(p)
    if overrides:
        config = apply_overrides(config, overrides)
    changes = {}
    if spp is not None:
        changes["samples_per_pixel"] = spp
    if seed is not None:
        changes["seed"] = seed
    if changes:
        try:
            config = replace(config, render=replace(config.render, **changes))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    return config


def _stats(path: str, overrides, config: SceneConfig, film) -> None:
    paths = int(film.count.sum())
    elapsed = getattr(film, "elapsed", 0.0)
    rate = paths / elapsed if elapsed > 0 else float("inf")
    _eprint(f"scene: {path}")
    _eprint(f"overrides: {', '.join(overrides) if overrides else '(none)'}")
    _eprint(f"image: {film.width}x{film.height}  spp: {config.render.samples_per_pixel}  "
            f"seed: {config.render.seed}")
    _eprint(f"time: {elapsed:.2f} s  paths: {paths}  paths/sec: {rate:.0f}")


def cmd_render(args) -> int:
    config = _load(args.scene, args.set, args.spp, args.seed)
    film = render(config, workers=args.threads, progress=args.progress)
    out = Path(args.output)
    if out.parent and not out.parent.exists():
        raise InputError(f"output directory does not exist: {out.parent}")
    write_image(film, out, args.format)
    _stats(args.scene, args.set, config, film)
    return EXIT_OK


def cmd_scene(args) -> int:
    text = serialize_scene(BUILTIN_SCENES[args.name]())
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    opts = ExperimentOptions(fast=args.fast, spp=args.spp, seed=args.seed or 0, workers=args.threads,
                             progress=args.progress)
    ids = EXPERIMENT_IDS if args.id == "all" else (args.id,)
    status = EXIT_OK
    for exp_id in ids:
        result = run_experiment(exp_id, opts)
        write_results(result, Path(args.out_dir))
        print(result.summary())
        if not result.passed:
            status = EXIT_PREDICATE
    return status


def _numeric_param(param: str) -> None:
    parts = param.split(".")
    block = parts[-2].split("[")[0] if len(parts) >= 2 else ""
    base, _ = split_key(block, parts[-1])
    if base is None:
        raise InputError(f"{param!r} does not name a scene field")
    f = SCHEMA[block][base]
    if f.kind not in ("len", "angle", "px", "num", "int", "per_cm") or f.n != 1:
        raise InputError(f"{param!r} is not a numeric scene field")


def cmd_sweep(args) -> int:
    _numeric_param(args.param)
    values = []
    for v in args.values.split(","):
        try:
            values.append(float(v))
        except ValueError:
            raise InputError(f"sweep value {v!r} is not a number") from None
    base = _load(args.scene, args.set, args.spp, args.seed)
    ref_cache = {}
    rows = []
    for v in values:
        text = repr(int(v)) if v.is_integer() else repr(v)
        config = apply_overrides(base, {args.param: text})
        film = render(config, workers=args.threads, progress=args.progress)
        image = film.to_rgb8()

        def reference(config=config):
            key = serialize_scene(replace_orb(config, present=False))
            if key not in ref_cache:
                ref_cache[key] = render(replace_orb(config, present=False), workers=args.threads).to_rgb8()
            return ref_cache[key]

        value = evaluate_metric(args.metric, config, image, reference)
        rows.append((v, value))
        _eprint(f"{args.param}={text}: {args.metric}={value:.6g} ({film.elapsed:.1f} s)")
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow([args.param, args.metric])
        for v, value in rows:
            w.writerow([f"{v:g}", f"{value:.6g}"])
    finally:
        if args.output:
            out.close()
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = _load(args.scene, args.set)
    image = read_rgb8(args.image)
    reference = None
    if args.reference:
        ref = read_rgb8(args.reference)
        reference = lambda: ref  # noqa: E731
    else:
        def reference():
            raise InputError(f"metric {args.metric} needs --reference (an orb-free render)")
    print(f"{args.metric}={evaluate_metric(args.metric, config, image, reference):.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbtrace", description="Render and measure glass orbs in front of a relief.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--spp", type=int, help="samples per pixel")
        if seed:
            sp.add_argument("--seed", type=int, help="random seed")
        sp.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or CPU count)")
        sp.add_argument("--progress", action="store_true", help="show progress on stderr")

    r = sub.add_parser("render", help="render a scene file")
    r.add_argument("scene")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--format", choices=("png", "ppm"), help="default: from the file extension")
    r.add_argument("--set", action="append", default=[], metavar="PATH=VALUE", help="override a scene value")
    common(r)
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("scene", help="print or write a built-in scene file")
    s.add_argument("name", choices=sorted(BUILTIN_SCENES))
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_scene)

    e = sub.add_parser("experiment", help="run a canned experiment")
    e.add_argument("id", choices=EXPERIMENT_IDS + ("all",))
    e.add_argument("--out-dir", default="orbtrace-out")
    e.add_argument("--fast", action="store_true", help="256x256 at 16 spp")
    common(e)
    e.set_defaults(func=cmd_experiment)

    w = sub.add_parser("sweep", help="render one image per parameter value and tabulate a metric")
    w.add_argument("param", help="dotted scene path, e.g. orb.thickness_mm")
    w.add_argument("values", help="comma-separated numbers")
    w.add_argument("--scene", required=True)
    w.add_argument("--metric", choices=sorted(METRICS), default="fold_displacement_px")
    w.add_argument("--set", action="append", default=[], metavar="PATH=VALUE")
    w.add_argument("-o", "--output", help="CSV path (default: stdout)")
    common(w)
    w.set_defaults(func=cmd_sweep)

    a = sub.add_parser("analyze", help="measure a rendered image")
    a.add_argument("image")
    a.add_argument("--scene", required=True)
    a.add_argument("--metric", choices=sorted(METRICS), default="fold_displacement_px")
    a.add_argument("--reference", help="orb-free render for inversion / rmse")
    a.add_argument("--set", action="append", default=[], metavar="PATH=VALUE")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 1:
        _eprint("error: --threads must be >= 1")
        return EXIT_INPUT
    try:
        return args.func(args)
    except (SceneFormatError, InputError, KeyError) as exc:
        _eprint(f"error: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _eprint(f"error: {exc}")
        return EXIT_INPUT
    except RenderError as exc:
        _eprint(f"render error: {exc}")
        return EXIT_RENDER
    except ValueError as exc:
        _eprint(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
