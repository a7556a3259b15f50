"""Command-line entry point: gen-env, run, sweep-lambda, sweep-cp, clutter, report."""

from __future__ import annotations

import argparse
import math
import os
import sys

from .harness import (
    EnvSpec,
    ExperimentSpec,
    clutter_matrix,
    report_text,
    run_experiment,
    sweep_cp,
    sweep_lambda,
)
from .planners import (
    DISTANCE_ADVANTAGE,
    GAIN_NAIVE,
    GAIN_TRUE,
    INFO_GAIN,
    NEAREST_FRONTIER,
    PlannerConfig,
)
from .world import generate_env

METHOD_ALIASES = {
    "nf": NEAREST_FRONTIER,
    "nearest-frontier": NEAREST_FRONTIER,
    "nearest_frontier": NEAREST_FRONTIER,
    "ig": INFO_GAIN,
    "info-gain": INFO_GAIN,
    "info_gain": INFO_GAIN,
    "da": DISTANCE_ADVANTAGE,
    "distance-advantage": DISTANCE_ADVANTAGE,
    "distance_advantage": DISTANCE_ADVANTAGE,
}


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key-value text mirroring the CLI flags, e.g. `kind = office`."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            if "=" not in ln:
                raise SystemExit(f"config line not key=value: {ln!r}")
            key, val = ln.split("=", 1)
            values[key.strip().replace("_", "-")] = val.strip()
    return values


def _parse_size(text: str) -> tuple[int, int]:
    if "x" in text:
        w, h = text.lower().split("x", 1)
        return int(w), int(h)
    n = int(text)
    return n, n


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--env", help="map file to explore (instead of generating)")
    p.add_argument("--kind", choices=["office", "cave", "maze"], help="generator kind")
    p.add_argument("--size", help="generated world size, N or WxH (cells)")
    p.add_argument("--seed", type=int, help="world seed and experiment master seed")
    p.add_argument("--method", action="append", help="nf | ig | da (repeatable)")
    p.add_argument("--lambda", dest="lam", type=float, help="gain affinity for ig")
    p.add_argument("--gain-mode", choices=[GAIN_NAIVE, GAIN_TRUE, "both"], help="ig gain estimator")
    p.add_argument("--cp", help="prediction range in cells beyond frontiers (int or 'inf')")
    p.add_argument("--window-m", type=float, help="local window side in meters")
    p.add_argument("--starts", type=int, help="number of paired starting locations")
    p.add_argument("--jobs", type=int, help="parallel episode workers")
    p.add_argument("--out", help="output directory (or map file for gen-env)")


_DEFAULTS = {
    "kind": "office",
    "size": "200",
    "seed": 0,
    "method": None,
    "lam": 1.0,
    "gain_mode": "both",
    "cp": "inf",
    "window_m": 30.0,
    "starts": 10,
    "jobs": 1,
    "out": "out",
}


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    file_vals = _read_config_file(args.config) if getattr(args, "config", None) else {}
    remap = {
        "env": "env", "kind": "kind", "size": "size", "seed": "seed", "method": "method",
        "lambda": "lam", "gain-mode": "gain_mode", "cp": "cp", "window-m": "window_m",
        "starts": "starts", "jobs": "jobs", "out": "out",
    }
    for key, attr in remap.items():
        if getattr(args, attr, None) is None:
            if key in file_vals:
                raw = file_vals[key]
                if attr == "method":
                    setattr(args, attr, [m.strip() for m in raw.split(",")])
                elif attr in ("seed", "starts", "jobs"):
                    setattr(args, attr, int(raw))
                elif attr in ("lam", "window_m"):
                    setattr(args, attr, float(raw))
                else:
                    setattr(args, attr, raw)
            elif attr in _DEFAULTS:
                setattr(args, attr, _DEFAULTS[attr])
    return args


def _parse_cp(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    return math.inf if text.strip().lower() == "inf" else float(text)


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    if args.env:
        env = EnvSpec(map_file=args.env, seed=args.seed)
    else:
        w, h = _parse_size(args.size)
        env = EnvSpec(kind=args.kind, width=w, height=h, seed=args.seed)
    names = args.method or ["nf", "da", "ig"]
    cp = _parse_cp(args.cp)
    methods = []
    for name in names:
        canonical = METHOD_ALIASES.get(name.lower())
        if canonical is None:
            raise SystemExit(f"unknown method {name!r}")
        mode = args.gain_mode if args.gain_mode != "both" else GAIN_NAIVE
        methods.append(
            PlannerConfig(canonical, lam=args.lam, gain_mode=mode, window_m=args.window_m, c_p=cp)
        )
    return ExperimentSpec(env=env, methods=methods, starts=args.starts, master_seed=args.seed)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="explorebench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("gen-env", "run", "sweep-lambda", "sweep-cp", "clutter", "report"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "sweep-lambda":
            p.add_argument("--lambdas", help="comma-separated lambda values", default="-4,-2,-1,0,1,2,4")
        if name == "sweep-cp":
            p.add_argument("--cps", help="comma-separated prediction ranges", default="0,2,4,8,inf")
        if name == "clutter":
            p.add_argument("--clutter-count", type=int, help="triangles per world (default: auto density)")
            p.add_argument("--clutter-size", type=float, default=1.0, help="triangle extent in meters")

    args = _merge(parser.parse_args(argv))

    if args.command == "gen-env":
        w, h = _parse_size(args.size)
        gt = generate_env(args.kind, w, h, args.seed)
        out = args.out if args.out != "out" else f"{args.kind}_{w}x{h}_{args.seed}.map"
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(gt.to_text())
        print(f"wrote {out} ({len(gt.starts)} start candidates)")
        return 0

    if args.command == "report":
        path = os.path.join(args.out, "summary.json") if os.path.isdir(args.out) else args.out
        print(report_text(path))
        return 0

    spec = _spec_from_args(args)
    if args.command == "run":
        summary = run_experiment(spec, parallelism=args.jobs, out_dir=args.out)
    elif args.command == "sweep-lambda":
        lambdas = [float(x) for x in args.lambdas.split(",")]
        modes = (GAIN_NAIVE, GAIN_TRUE) if args.gain_mode in (None, "both") else (args.gain_mode,)
        summary = sweep_lambda(spec, lambdas, modes, parallelism=args.jobs, out_dir=args.out)
    elif args.command == "sweep-cp":
        cps = [_parse_cp(x) for x in args.cps.split(",")]
        summary = sweep_cp(spec, cps, parallelism=args.jobs, out_dir=args.out)
    elif args.command == "clutter":
        spec.clutter_count = args.clutter_count
        spec.clutter_size = args.clutter_size
        summary = clutter_matrix(spec, parallelism=args.jobs, out_dir=args.out)
    else:  # pragma: no cover
        raise SystemExit(args.command)

    print(report_text(os.path.join(args.out, "summary.json")))
    return 0


if __name__ == "__main__":
    sys.exit(main())
