"""Closed-loop exploration episode: sense, map, plan, execute with early
termination, repeat until no reachable frontier remains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FREE, OCCUPIED, SQRT2
from .mapping import (
    DEFAULT_MAX_RANGE_M,
    DEFAULT_RAY_COUNT,
    KnownMap,
    cast_scan,
    integrate_scan,
)
from .nav import clearance_field, distance_field, extract_path
from .frontier import detect_frontiers, frontier_count, window_filter, FrontierSet
from .planners import (
    DISTANCE_ADVANTAGE,
    INFO_GAIN,
    NEAREST_FRONTIER,
    Decision,
    GainCache,
    PlannerConfig,
    plan_distance_advantage,
    plan_info_gain,
    plan_nearest_frontier,
)
from .predictor import PlanningMap, predict
from .world import GroundTruth


class StartBlockedError(ValueError):
    pass


class NonTerminationError(RuntimeError):
    pass


class EmptyLogError(ValueError):
    pass


@dataclass
class EpisodeLog:
    distances: np.ndarray  # meters traveled at each sample
    coverage: np.ndarray  # known-cell count at each sample
    frontier_sizes: np.ndarray  # |F| at each sample
    decisions: list[tuple[int, Decision]]  # (sample index at decision time, decision)
    d_t: float
    seed: int
    config: dict

    @property
    def fallback_count(self) -> int:
        return sum(1 for _, d in self.decisions if d.used_fallback)


def metrics_resample(log: EpisodeLog, grid: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Step-function (last observation carried forward) resampling of c(d) and
    f(d) onto a uniform distance grid."""
    if grid <= 0:
        raise ValueError("grid step must be > 0")
    if len(log.distances) == 0:
        raise EmptyLogError("episode log has no samples")
    d_grid = np.arange(0.0, log.d_t + grid, grid)
    idx = np.searchsorted(log.distances, d_grid, side="right") - 1
    idx = np.clip(idx, 0, len(log.distances) - 1)
    return d_grid, log.coverage[idx].astype(np.float64), log.frontier_sizes[idx].astype(np.float64)


def run_episode(
    world: GroundTruth,
    start: tuple[int, int],
    config: PlannerConfig,
    prediction_world: GroundTruth | None = None,
    seed: int = 0,
    *,
    ray_count: int = DEFAULT_RAY_COUNT,
    max_range: float = DEFAULT_MAX_RANGE_M,
    step_budget: int | None = None,
    validate: bool = False,
) -> EpisodeLog:
    """Run one exploration episode to completion. Deterministic in its inputs.

    `prediction_world` feeds the map predictor (distance advantage) and the
    true-gain oracle (info gain); it may differ from `world` to model
    mismatched predictions. Predictions never affect coverage accounting or
    path execution, which stay on the known map.
    """
    if world.cells[start] != FREE:
        raise StartBlockedError(f"start {start} is not free")
    kmap = KnownMap.empty(world)
    budget = step_budget if step_budget is not None else 50 * world.width * world.height
    gain_world = prediction_world if prediction_world is not None else world
    cache: GainCache | None = None
    if config.method == INFO_GAIN and config.lam != 0.0:
        cache = GainCache(gain_world, ray_count, max_range)

    distances: list[float] = []
    coverage: list[int] = []
    frontier_sizes: list[int] = []
    decisions: list[tuple[int, Decision]] = []
    traveled = 0.0
    known = 0
    integrations = 0
    pos = start

    def sense(at: tuple[int, int]) -> int:
        """Scan + integrate at `at`; returns number of newly known cells."""
        nonlocal known, integrations
        scan = cast_scan(world, at, ray_count, max_range)
        delta = integrate_scan(kmap, scan, world)
        integrations += 1
        if integrations > budget:
            raise NonTerminationError(f"step budget {budget} exceeded")
        n = len(delta)
        known += n
        if cache is not None and n:
            occ_rc = delta.cells[delta.states == OCCUPIED]
            cache.note_occupied(occ_rc)
        if validate:
            wf = world.cells[delta.cells[:, 0], delta.cells[:, 1]]
            if not (wf == delta.states).all():
                raise AssertionError("integration contradicts ground truth")
        distances.append(traveled)
        coverage.append(known)
        frontier_sizes.append(frontier_count(kmap))
        return n

    sense(pos)

    while True:
        frontiers = detect_frontiers(kmap)
        traversable = kmap.cells == FREE
        robot_field = distance_field(traversable, [pos], world.cell_size, "map-free")
        reachable_mask = np.isfinite(
            robot_field.distances[frontiers.cells[:, 0], frontiers.cells[:, 1]]
        ) if len(frontiers) else np.zeros(0, dtype=bool)
        if not reachable_mask.any():
            break
        reachable = FrontierSet(frontiers.cells[reachable_mask], frontiers.map_version)
        clearance = clearance_field(kmap)

        if config.method == NEAREST_FRONTIER:
            decision = plan_nearest_frontier(robot_field, reachable)
        elif config.method == INFO_GAIN:
            decision = plan_info_gain(
                kmap,
                gain_world,
                robot_field,
                reachable,
                config.lam,
                config.gain_mode,
                clearance=clearance,
                traversable=traversable,
                cache=cache,
                ray_count=ray_count,
                max_range=max_range,
            )
        elif config.method == DISTANCE_ADVANTAGE:
            inside, outside = window_filter(reachable, pos, config.window_m, world.cell_size)
            if prediction_world is not None and config.c_p > 0:
                pmap = predict(kmap, frontiers, prediction_world, pos, config.window_m, config.c_p)
            else:
                pmap = PlanningMap(
                    kmap,
                    np.empty(0, dtype=np.int64),
                    np.empty(0, dtype=np.uint8),
                    config.window_m,
                    0.0,
                )
            decision = plan_distance_advantage(
                pmap, pos, inside, outside, config.window_m, known_robot_field=robot_field
            )
        else:  # pragma: no cover
            raise ValueError(config.method)
        decisions.append((len(distances) - 1, decision))

        path = extract_path(robot_field, decision.target, clearance, traversable)
        for (pr, pc) in path.cells[1:]:
            step = world.cell_size * SQRT2 if (pr != pos[0] and pc != pos[1]) else world.cell_size
            if validate and world.cells[pr, pc] != FREE:
                raise AssertionError(f"executed cell {(pr, pc)} is world-occupied")
            traveled += step
            pos = (pr, pc)
            if sense(pos) > 0:
                break  # replan as soon as the map changed

    if validate:
        bad_free = (kmap.cells == FREE) & (world.cells != FREE)
        bad_occ = (kmap.cells == OCCUPIED) & (world.cells != OCCUPIED)
        if bad_free.any() or bad_occ.any():
            raise AssertionError("final map contradicts ground truth")

    return EpisodeLog(
        np.array(distances),
        np.array(coverage, dtype=np.int64),
        np.array(frontier_sizes, dtype=np.int64),
        decisions,
        traveled,
        seed,
        {
            "method": config.method,
            "lambda": config.lam,
            "gain_mode": config.gain_mode,
            "window_m": config.window_m,
            "c_p": config.c_p,
            "ray_count": ray_count,
            "max_range": max_range,
            "start": list(start),
            "seed": seed,
        },
    )


def coverage_oracle(world: GroundTruth, start: tuple[int, int]) -> int:
    """Expected final coverage: robot-reachable free cells plus the occupied
    shell 4-adjacent to them (what conservative scanning can and must see)."""
    from .grid import reachable_free

    reach = reachable_free(world.cells, start)
    occ = world.cells == OCCUPIED
    shell = np.zeros_like(occ)
    shell[1:, :] |= reach[:-1, :]
    shell[:-1, :] |= reach[1:, :]
    shell[:, 1:] |= reach[:, :-1]
    shell[:, :-1] |= reach[:, 1:]
    return int(reach.sum() + (occ & shell).sum())
