"""Experiment orchestration: paired multi-seed batches, the sweep families,
deterministic aggregation and bit-stable CSV/JSON emission."""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .episode import run_episode
from .planners import INFO_GAIN, NEAREST_FRONTIER, PlannerConfig
from .world import ClutterSpec, GroundTruth, add_clutter, generate_env, parse_env

SCHEMA_VERSION = 1
CSV_HEADER = "schema_version,run_id,seed,method,lambda,gain_mode,cp,start_idx,d_m,coverage_cells,frontier_cells"

CONDITIONS = (("clean", "clean"), ("noise", "clean"), ("noise", "noise"))


class SpecInvalidError(ValueError):
    pass


class EpisodeFailedError(RuntimeError):
    pass


@dataclass
class EnvSpec:
    kind: str | None = None
    width: int = 0
    height: int = 0
    seed: int = 0
    map_file: str | None = None

    def load(self) -> GroundTruth:
        if self.map_file:
            with open(self.map_file, "r", encoding="utf-8") as fh:
                return parse_env(fh.read())
        if not self.kind:
            raise SpecInvalidError("need either a map file or a generator kind")
        return generate_env(self.kind, self.width, self.height, self.seed)


@dataclass
class ExperimentSpec:
    env: EnvSpec
    methods: list[PlannerConfig]
    starts: int = 10
    master_seed: int = 0
    clutter_count: int | None = None  # None = auto density when clutter is used
    clutter_size: float = 1.0
    curve_step: float = 2.0  # meters, for resampled c(d)/f(d) curves

    def validate(self) -> None:
        if self.starts < 1:
            raise SpecInvalidError("starts must be >= 1")
        if not self.methods:
            raise SpecInvalidError("need at least one method")


@dataclass
class EpisodeJob:
    run_id: str
    method: str
    config: PlannerConfig
    sweep: str  # "" for the base experiment
    start_idx: int
    env_clutter: str | None  # "noise" or None
    pred_clutter: str | None
    seed: int


@dataclass
class Summary:
    rows: list[dict]
    curves: dict[str, dict]
    episodes: dict[str, dict]

    def to_json_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "rows": self.rows, "curves": self.curves}


def derive_seed(*parts) -> int:
    """Stable 63-bit child seed; adding methods or sweep points never perturbs
    the seeds of existing ones."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def default_clutter_count(world: GroundTruth) -> int:
    """Roughly 3-5% of free area occluded by ~1 m triangles."""
    free_cells = int((world.cells == 0).sum())
    return max(1, free_cells // 75)


def method_label(cfg: PlannerConfig) -> str:
    return cfg.method


def _fmt_float(x: float) -> str:
    if math.isinf(x):
        return "inf"
    if x == int(x):
        return str(int(x))
    return repr(x)


def _sweep_sort_key(job: EpisodeJob):
    return (job.method, job.sweep, job.start_idx)


# --- episode workers -----------------------------------------------------------

_worker_state: dict = {}


def _init_worker(world: GroundTruth, spec: ExperimentSpec):
    _worker_state["world"] = world
    _worker_state["spec"] = spec
    _worker_state["clutter_memo"] = {}


def _cluttered(world: GroundTruth, spec: ExperimentSpec, tag: str, start_idx: int, master: int) -> GroundTruth:
    memo = _worker_state.setdefault("clutter_memo", {})
    seed = derive_seed(master, tag, start_idx)
    key = (tag, start_idx)
    if key not in memo:
        count = spec.clutter_count if spec.clutter_count is not None else default_clutter_count(world)
        memo[key] = add_clutter(world, ClutterSpec(count, spec.clutter_size, seed))
    return memo[key]


def _run_job(job: EpisodeJob) -> tuple[str, dict]:
    world: GroundTruth = _worker_state["world"]
    spec: ExperimentSpec = _worker_state["spec"]
    env_world = world
    if job.env_clutter == "noise":
        env_world = _cluttered(world, spec, "env-clutter", job.start_idx, spec.master_seed)
    if job.pred_clutter == "noise":
        pred_world = _cluttered(world, spec, "pred-clutter", job.start_idx, spec.master_seed)
    else:
        pred_world = world  # clean predictions = the clean base world
    start = world.starts[job.start_idx]
    t0 = time.perf_counter()
    try:
        log = run_episode(env_world, start, job.config, pred_world, job.seed)
    except Exception as err:  # noqa: BLE001 - re-raised with repro context
        raise EpisodeFailedError(f"{job.run_id} (seed {job.seed}, start {start}): {err}") from err
    wall = time.perf_counter() - t0
    return job.run_id, {
        "distances": log.distances,
        "coverage": log.coverage,
        "frontier_sizes": log.frontier_sizes,
        "d_t": log.d_t,
        "decisions": len(log.decisions),
        "fallbacks": log.fallback_count,
        "wall_s": wall,
    }


def _execute(jobs: list[EpisodeJob], world: GroundTruth, spec: ExperimentSpec, parallelism: int) -> dict[str, dict]:
    results: dict[str, dict] = {}
    if parallelism <= 1:
        _init_worker(world, spec)
        for job in jobs:
            run_id, res = _run_job(job)
            results[run_id] = res
    else:
        with ProcessPoolExecutor(
            max_workers=parallelism, initializer=_init_worker, initargs=(world, spec)
        ) as pool:
            for run_id, res in pool.map(_run_job, jobs, chunksize=1):
                results[run_id] = res
    return results


# --- output files ----------------------------------------------------------------


def _csv_rows(job: EpisodeJob, res: dict):
    cfg = job.config
    lam = _fmt_float(cfg.lam) if cfg.method == INFO_GAIN else ""
    mode = cfg.gain_mode if cfg.method == INFO_GAIN else ""
    cp = _fmt_float(cfg.c_p)
    for d, cov, fr in zip(res["distances"], res["coverage"], res["frontier_sizes"]):
        yield (
            f"{SCHEMA_VERSION},{job.run_id},{job.seed},{job.method},{lam},{mode},{cp},"
            f"{job.start_idx},{d:.6f},{cov},{fr}"
        )


def write_raw_csv(path: str, jobs: list[EpisodeJob], results: dict[str, dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for job in jobs:
            for row in _csv_rows(job, results[job.run_id]):
                fh.write(row + "\n")


def resample_on(distances: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(distances, grid, side="right") - 1
    idx = np.clip(idx, 0, len(distances) - 1)
    return values[idx].astype(np.float64)


def _group_curves(group: list[dict], step: float) -> dict:
    d_max = max(r["d_t"] for r in group)
    grid = np.arange(0.0, d_max + step, step)
    cov = np.stack([resample_on(r["distances"], r["coverage"], grid) for r in group])
    fro = np.stack([resample_on(r["distances"], r["frontier_sizes"], grid) for r in group])
    return {
        "d": grid.tolist(),
        "c_mean": cov.mean(axis=0).tolist(),
        "c_lo": np.percentile(cov, 10, axis=0).tolist(),
        "c_hi": np.percentile(cov, 90, axis=0).tolist(),
        "f_mean": fro.mean(axis=0).tolist(),
        "f_lo": np.percentile(fro, 10, axis=0).tolist(),
        "f_hi": np.percentile(fro, 90, axis=0).tolist(),
    }


def build_summary(jobs: list[EpisodeJob], results: dict[str, dict], curve_step: float) -> Summary:
    groups: dict[tuple[str, str], list[EpisodeJob]] = {}
    for job in jobs:
        groups.setdefault((job.method, job.sweep), []).append(job)
    for members in groups.values():
        members.sort(key=lambda j: j.start_idx)

    def d_ts(members):
        return {j.start_idx: results[j.run_id]["d_t"] for j in members}

    rows = []
    curves = {}
    for (method, sweep) in sorted(groups):
        members = groups[(method, sweep)]
        vals = [results[j.run_id]["d_t"] for j in members]
        n = len(vals)
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if n > 1 else 0.0
        # paired baseline: nearest frontier at the same sweep point, else base
        nf_members = groups.get((NEAREST_FRONTIER, sweep)) or groups.get((NEAREST_FRONTIER, ""))
        delta_mean = delta_std = None
        if nf_members:
            nf_by_start = d_ts(nf_members)
            deltas = [
                results[j.run_id]["d_t"] - nf_by_start[j.start_idx]
                for j in members
                if j.start_idx in nf_by_start
            ]
            if deltas:
                delta_mean = float(np.mean(deltas))
                delta_std = float(np.std(deltas, ddof=1)) if len(deltas) > 1 else 0.0
        rows.append(
            {
                "method": method,
                "sweep": sweep,
                "mean_dT_m": mean,
                "std_dT_m": std,
                "delta_nf_mean_m": delta_mean,
                "delta_nf_std_m": delta_std,
                "n": n,
            }
        )
        key = f"{method}|{sweep}" if sweep else method
        curves[key] = _group_curves([results[j.run_id] for j in members], curve_step)
    episodes = {
        j.run_id: {
            "d_T_m": results[j.run_id]["d_t"],
            "decisions": results[j.run_id]["decisions"],
            "fallbacks": results[j.run_id]["fallbacks"],
            "wall_s": results[j.run_id]["wall_s"],
        }
        for j in jobs
    }
    return Summary(rows, curves, episodes)


def _write_outputs(out_dir: str, jobs, results, summary: Summary) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_raw_csv(os.path.join(out_dir, "raw.csv"), jobs, results)
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary.to_json_dict(), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    with open(os.path.join(out_dir, "episodes.json"), "w", encoding="utf-8") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, "episodes": summary.episodes}, fh, sort_keys=True, indent=1)
        fh.write("\n")


# --- experiment families ----------------------------------------------------------


def _base_jobs(spec: ExperimentSpec, sweep: str = "", configs: list[PlannerConfig] | None = None,
               env_clutter: str | None = None, pred_clutter: str | None = None) -> list[EpisodeJob]:
    jobs = []
    for cfg in configs if configs is not None else spec.methods:
        for s in range(spec.starts):
            label = f".{sweep}" if sweep else ""
            run_id = f"{cfg.method}{label}.s{s:02d}"
            seed = derive_seed(spec.master_seed, cfg.method, cfg.lam, cfg.gain_mode, cfg.c_p, sweep, s)
            jobs.append(EpisodeJob(run_id, cfg.method, cfg, sweep, s, env_clutter, pred_clutter, seed))
    return jobs


def _finish(spec: ExperimentSpec, world: GroundTruth, jobs: list[EpisodeJob],
            parallelism: int, out_dir: str | None) -> Summary:
    spec.validate()
    if spec.starts > len(world.starts):
        raise SpecInvalidError(f"world offers {len(world.starts)} starts, spec wants {spec.starts}")
    jobs = sorted(jobs, key=_sweep_sort_key)
    results = _execute(jobs, world, spec, parallelism)
    summary = build_summary(jobs, results, spec.curve_step)
    if out_dir:
        _write_outputs(out_dir, jobs, results, summary)
    return summary


def run_experiment(spec: ExperimentSpec, parallelism: int = 1, out_dir: str | None = None) -> Summary:
    """|methods| x |starts| paired episodes with perfect predictions."""
    world = spec.env.load()
    return _finish(spec, world, _base_jobs(spec), parallelism, out_dir)


def sweep_lambda(
    spec: ExperimentSpec,
    lambdas: list[float],
    gain_modes: tuple[str, ...] = ("naive", "true"),
    parallelism: int = 1,
    out_dir: str | None = None,
) -> Summary:
    """Gain-affinity sweep for the info-gain planner plus a nearest-frontier
    baseline for the paired deltas."""
    world = spec.env.load()
    base_ig = next((m for m in spec.methods if m.method == INFO_GAIN), PlannerConfig(INFO_GAIN))
    jobs = _base_jobs(spec, configs=[PlannerConfig(NEAREST_FRONTIER, window_m=base_ig.window_m, c_p=base_ig.c_p)])
    for lam in lambdas:
        for mode in gain_modes:
            cfg = replace(base_ig, lam=lam, gain_mode=mode)
            jobs += _base_jobs(spec, sweep=f"lambda={_fmt_float(lam)}|mode={mode}", configs=[cfg])
    return _finish(spec, world, jobs, parallelism, out_dir)


def sweep_cp(
    spec: ExperimentSpec,
    cp_values: list[float],
    parallelism: int = 1,
    out_dir: str | None = None,
) -> Summary:
    """Prediction-range sweep across all configured methods."""
    world = spec.env.load()
    jobs = []
    for cp in cp_values:
        cfgs = [replace(m, c_p=cp) for m in spec.methods]
        jobs += _base_jobs(spec, sweep=f"cp={_fmt_float(cp)}", configs=cfgs)
    return _finish(spec, world, jobs, parallelism, out_dir)


def clutter_matrix(spec: ExperimentSpec, parallelism: int = 1, out_dir: str | None = None) -> Summary:
    """Clean/Clean, Noise/Clean and Noise/Noise environment/prediction grid.

    Environment and prediction clutter are sampled independently per starting
    location and shared across methods (paired design).
    """
    world = spec.env.load()
    jobs = []
    for env_c, pred_c in CONDITIONS:
        jobs += _base_jobs(
            spec,
            sweep=f"env={env_c}|pred={pred_c}",
            env_clutter=env_c if env_c == "noise" else None,
            pred_clutter=pred_c if pred_c == "noise" else None,
        )
    return _finish(spec, world, jobs, parallelism, out_dir)


def report_text(summary_path: str) -> str:
    """Human-readable table for the `report` subcommand."""
    with open(summary_path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    lines = [f"{'method':<22} {'sweep':<28} {'mean d_T (m)':>12} {'std':>9} {'Δ vs NF':>10} {'n':>3}"]
    for row in data["rows"]:
        delta = "-" if row["delta_nf_mean_m"] is None else f"{row['delta_nf_mean_m']:+.1f}"
        lines.append(
            f"{row['method']:<22} {row['sweep'] or '-':<28} {row['mean_dT_m']:>12.1f} "
            f"{row['std_dT_m']:>9.1f} {delta:>10} {row['n']:>3}"
        )
    return "\n".join(lines)
