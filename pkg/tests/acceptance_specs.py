"""Experiment definitions shared by the acceptance suite and the cache warmer.

The heavy experiments write their raw.csv / summary.json / episodes.json into
tests/_artifacts/<name>/ on first run and are reused afterwards; outputs are
byte-deterministic for a fixed spec, so the cache is purely a time saver.
Delete tests/_artifacts to force fresh runs.
"""

from __future__ import annotations

import json
import os

from explorebench.harness import (
    EnvSpec,
    ExperimentSpec,
    clutter_matrix,
    run_experiment,
    sweep_cp,
    sweep_lambda,
)
from explorebench.planners import (
    DISTANCE_ADVANTAGE,
    INFO_GAIN,
    NEAREST_FRONTIER,
    PlannerConfig,
)

ARTIFACTS = os.path.join(os.path.dirname(__file__), "_artifacts")
JOBS = max(1, os.cpu_count() or 1)

OFFICE = dict(kind="office", width=200, height=200, seed=0)
MASTER = 0
STARTS = 10

ACCEPT_LAMBDAS = [-2.0, 0.0, 2.0, 4.0]


def office_spec(methods) -> ExperimentSpec:
    return ExperimentSpec(
        env=EnvSpec(**OFFICE),
        methods=methods,
        starts=STARTS,
        master_seed=MASTER,
    )


def three_methods() -> list[PlannerConfig]:
    return [
        PlannerConfig(NEAREST_FRONTIER),
        PlannerConfig(DISTANCE_ADVANTAGE),
        PlannerConfig(INFO_GAIN, lam=1.0, gain_mode="naive"),
    ]


EXPERIMENTS = {
    "ordering": lambda out: run_experiment(office_spec(three_methods()), JOBS, out),
    "lambda_sweep": lambda out: sweep_lambda(
        office_spec([PlannerConfig(INFO_GAIN)]), ACCEPT_LAMBDAS, ("naive", "true"), JOBS, out
    ),
    "cp_sweep": lambda out: sweep_cp(
        office_spec([PlannerConfig(NEAREST_FRONTIER), PlannerConfig(DISTANCE_ADVANTAGE)]),
        [0.0, 2.0],
        JOBS,
        out,
    ),
    "clutter": lambda out: clutter_matrix(office_spec(three_methods()), JOBS, out),
}


def artifact_dir(name: str) -> str:
    return os.path.join(ARTIFACTS, name)


def ensure_experiment(name: str) -> str:
    """Run (or reuse) a named experiment; returns its output directory."""
    out = artifact_dir(name)
    marker = os.path.join(out, "summary.json")
    if not os.path.exists(marker):
        EXPERIMENTS[name](out)
    return out


def load_summary(name: str) -> dict:
    out = ensure_experiment(name)
    with open(os.path.join(out, "summary.json"), "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    with open(os.path.join(out, "episodes.json"), "r", encoding="utf-8") as fh:
        summary["episodes"] = json.load(fh)["episodes"]
    return summary


def rows_by(summary: dict, method: str, sweep: str = "") -> dict:
    for row in summary["rows"]:
        if row["method"] == method and row["sweep"] == sweep:
            return row
    raise KeyError((method, sweep))


def per_start_dts(summary: dict, method: str, sweep: str = "") -> dict[int, float]:
    label = f".{sweep}" if sweep else ""
    out = {}
    for run_id, info in summary["episodes"].items():
        prefix = f"{method}{label}.s"
        if run_id.startswith(prefix) and run_id[len(prefix) :].isdigit():
            out[int(run_id[len(prefix) :])] = info["d_T_m"]
    return out


if __name__ == "__main__":
    import sys
    import time

    names = sys.argv[1:] or list(EXPERIMENTS)
    for name in names:
        t0 = time.time()
        out = ensure_experiment(name)
        print(f"{name}: ready at {out} ({time.time() - t0:.0f}s)", flush=True)
