"""Command-line entry point: ``neurotopo {solve,sweep,render}``.

Exit status: 0 on success, 2 for bad input (config, spec, checkpoint,
arguments), 3 when a run fails numerically (partial outputs are kept).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .condfield import write_field_csv
from .errors import OptimizationAborted, ParameterError
from .export import density_image, write_grid_csv, write_pgm
from .harness import SweepSpec, run_sweep, summarize, write_summary
from .network import load_params, save_params
from .optimize import OptimizationConfig, conditioning_field, render_density, run_optimization
from .problems import load_config, problem_from_config, resolve_config

log = logging.getLogger("neurotopo")


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _unwrap(raw: dict):
    """Split a loaded config into (problem config, optimization overrides).

    A manifest from a previous run nests the problem under ``problem`` and
    carries its optimization settings alongside; plain configs have neither.
    """
    if "problem" in raw:
        return resolve_config(raw["problem"]), dict(raw.get("optimization", {}))
    return resolve_config(raw), {}


def cmd_solve(args) -> int:
    try:
        problem_cfg, opt_base = _unwrap(load_config(args.config))
        problem = problem_from_config(problem_cfg)
        opt = {**asdict(OptimizationConfig()), **opt_base}
        for key, flag in (("seed", "seed"), ("filter", "filter"), ("epochs", "epochs"),
                          ("n_kernels", "kernels"), ("lr", "lr")):
            value = getattr(args, flag)
            if value is not None:
                opt[key] = value
        config = OptimizationConfig(**opt)
    except (ParameterError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {name: out / name for name in
             ("history.csv", "density.pgm", "density.csv", "params.csv")}
    if config.filter != "none":
        files["field.csv"] = out / "field.csv"
    manifest = {
        "tool": "neurotopo", "version": __version__, "command": "solve",
        "problem": problem_cfg, "optimization": asdict(config), "seed": config.seed,
        "timestamps": {"started": _now()}, "outputs": sorted(["manifest.json", *files]),
        "status": "running",
    }
    _write_manifest(out / "manifest.json", manifest)

    status = 0
    try:
        hist = run_optimization(problem, config)
    except OptimizationAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        hist, status = exc.history, 3
        manifest["status"] = f"failed: {exc}"
    else:
        manifest["status"] = "ok"
        log.info("final compliance %.6g, volume fraction %.4f, %.1fs",
                 hist.compliance[-1], hist.vol_frac[-1], hist.wall_time)

    hist.to_csv(files["history.csv"])
    if hist.density is not None:
        img = density_image(hist.density, problem.domain)
        write_pgm(files["density.pgm"], img)
        write_grid_csv(files["density.csv"], img)
    if hist.params is not None:
        save_params(files["params.csv"], hist.params, config.filter)
    if "field.csv" in files and hist.field is not None:
        write_field_csv(files["field.csv"], hist.field)
    manifest["outputs"] = sorted(["manifest.json", *(name for name, p in files.items() if p.exists())])
    manifest["timestamps"]["finished"] = _now()
    _write_manifest(out / "manifest.json", manifest)
    return status


def cmd_sweep(args) -> int:
    try:
        spec = SweepSpec.from_file(args.spec)
    except (ParameterError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_sweep(spec, workers=args.workers)
    result.to_csv(out / "results.csv")
    summary = summarize(result)
    write_summary(out / "summary.json", summary)
    for failure in summary["failures"]:
        print(f"cell failed: {failure}", file=sys.stderr)
    if len(result.failures) == len(result.records):
        return 3
    return 0


def cmd_render(args) -> int:
    if args.upsample < 1:
        print("error: upsample factor must be >= 1", file=sys.stderr)
        return 2
    try:
        params, filt = load_params(args.checkpoint)
        problem = problem_from_config(_unwrap(load_config(args.config))[0])
    except (ParameterError, OSError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    field = conditioning_field(problem, filt) if filt != "none" else None
    img = render_density(params, problem, args.upsample, field)
    write_pgm(args.out, img)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neurotopo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one neural topology optimization")
    p.add_argument("config", help="problem config (YAML/JSON) or a previous manifest.json")
    p.add_argument("--seed", type=int)
    p.add_argument("--filter", choices=["none", "gamma", "log"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--kernels", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a parametric sweep")
    p.add_argument("spec")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="render a trained network at higher resolution")
    p.add_argument("checkpoint")
    p.add_argument("--config", required=True, help="problem config the network was trained on")
    p.add_argument("--upsample", type=int, default=1)
    p.add_argument("--out", default="render.pgm")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
