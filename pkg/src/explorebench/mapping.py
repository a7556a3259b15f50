"""Simulated 360° range sensor and conservative scan accumulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .grid import DEFAULT_CELL_SIZE, FREE, OCCUPIED, UNKNOWN
from .world import GroundTruth

DEFAULT_RAY_COUNT = 720
DEFAULT_MAX_RANGE_M = 4.5

TERMINAL_MAX_RANGE = 0
TERMINAL_HIT = 1


class OriginBlockedError(ValueError):
    pass


class InconsistentScanError(RuntimeError):
    pass


@dataclass
class Scan:
    """One range measurement set. Ranges are meters; hit ranges are reported
    as (entry distance + half a cell) so an axis-aligned wall k cells away
    reads exactly k * cell_size."""

    origin: tuple[int, int]
    ray_count: int
    max_range: float
    ranges: np.ndarray  # (ray_count,) float64 meters
    terminals: np.ndarray  # (ray_count,) uint8, TERMINAL_*


@dataclass
class KnownMap:
    """The robot's tri-state map, built conservatively from scans."""

    width: int
    height: int
    cells: np.ndarray  # uint8 FREE / OCCUPIED / UNKNOWN
    cell_size: float = DEFAULT_CELL_SIZE
    version: int = 0

    @classmethod
    def empty(cls, world: GroundTruth) -> "KnownMap":
        cells = np.full((world.height, world.width), UNKNOWN, dtype=np.uint8)
        return cls(world.width, world.height, cells, world.cell_size)

    def known_count(self) -> int:
        return int((self.cells != UNKNOWN).sum())


@dataclass
class MapDelta:
    cells: np.ndarray  # (n, 2) int32 row-major sorted
    states: np.ndarray  # (n,) uint8

    def __len__(self) -> int:
        return len(self.states)


_dir_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def ray_directions(ray_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Evenly spaced ray unit vectors; ray 0 points due east (+column)."""
    dirs = _dir_cache.get(ray_count)
    if dirs is None:
        ang = 2.0 * np.pi * np.arange(ray_count) / ray_count
        dirs = (np.sin(ang), np.cos(ang))  # (dr, dc)
        _dir_cache[ray_count] = dirs
    return dirs


@njit(cache=True)
def _trace(block, r0, c0, dirs_r, dirs_c, max_range, ranges, terminals,
           stamp_full, stamp_touch, epoch, full_buf, touch_buf, hit_buf):
    """Grid traversal of all rays from the center of (r0, c0).

    `block` is the binary blocking grid (1 blocks). Rays start at the cell
    center; a cell is recorded as fully traversed only when the ray enters and
    exits it within max_range. Exact corner crossings step diagonally unless
    both shared orthogonal cells block, in which case the ray ends unmarked.
    Distances are in cell units. Returns buffer fill counts.
    """
    h, w = block.shape
    n_full = 0
    n_touch = 0
    n_hit = 0
    for k in range(dirs_r.shape[0]):
        dr = dirs_r[k]
        dc = dirs_c[k]
        r = r0
        c = c0
        # parametric distance to the next row/col boundary
        if dr > 0.0:
            step_r = 1
            t_max_r = 0.5 / dr
            t_delta_r = 1.0 / dr
        elif dr < 0.0:
            step_r = -1
            t_max_r = 0.5 / -dr
            t_delta_r = 1.0 / -dr
        else:
            step_r = 0
            t_max_r = np.inf
            t_delta_r = np.inf
        if dc > 0.0:
            step_c = 1
            t_max_c = 0.5 / dc
            t_delta_c = 1.0 / dc
        elif dc < 0.0:
            step_c = -1
            t_max_c = 0.5 / -dc
            t_delta_c = 1.0 / -dc
        else:
            step_c = 0
            t_max_c = np.inf
            t_delta_c = np.inf

        ranges[k] = max_range
        terminals[k] = TERMINAL_MAX_RANGE
        while True:
            if t_max_r == t_max_c:
                # exact corner crossing: blocked when both orthos block
                t_entry = t_max_r
                if t_entry >= max_range:
                    break
                o1r, o1c = r + step_r, c
                o2r, o2c = r, c + step_c
                if not (0 <= o1r < h and 0 <= o2c < w):
                    break
                if block[o1r, o1c] == 1 and block[o2r, o2c] == 1:
                    ranges[k] = t_entry  # beam stops on the pinched corner
                    break
                r += step_r
                c += step_c
                t_max_r += t_delta_r
                t_max_c += t_delta_c
            elif t_max_r < t_max_c:
                t_entry = t_max_r
                if t_entry >= max_range:
                    break
                r += step_r
                t_max_r += t_delta_r
            else:
                t_entry = t_max_c
                if t_entry >= max_range:
                    break
                c += step_c
                t_max_c += t_delta_c
            if not (0 <= r < h and 0 <= c < w):
                break
            idx = r * w + c
            if block[r, c] == 1:
                hit_range = t_entry + 0.5
                if hit_range > max_range:
                    hit_range = max_range
                ranges[k] = hit_range
                terminals[k] = TERMINAL_HIT
                if stamp_touch[idx] != epoch:
                    stamp_touch[idx] = epoch
                    touch_buf[n_touch] = idx
                    n_touch += 1
                    hit_buf[n_hit] = idx
                    n_hit += 1
                break
            if stamp_touch[idx] != epoch:
                stamp_touch[idx] = epoch
                touch_buf[n_touch] = idx
                n_touch += 1
            t_exit = t_max_r if t_max_r < t_max_c else t_max_c
            if t_exit <= max_range:
                if stamp_full[idx] != epoch:
                    stamp_full[idx] = epoch
                    full_buf[n_full] = idx
                    n_full += 1
            else:
                break  # partially traversed end cell stays unmarked
    return n_full, n_touch, n_hit


class _TraceWorkspace:
    """Reusable scratch buffers for _trace (one per thread of control)."""

    def __init__(self, shape):
        n = shape[0] * shape[1]
        self.stamp_full = np.zeros(n, dtype=np.int64)
        self.stamp_touch = np.zeros(n, dtype=np.int64)
        self.epoch = 0
        cap = 32768
        self.full_buf = np.empty(cap, dtype=np.int64)
        self.touch_buf = np.empty(cap, dtype=np.int64)
        self.hit_buf = np.empty(4096, dtype=np.int64)

    def next_epoch(self) -> int:
        self.epoch += 1
        return self.epoch


_workspaces: dict[tuple[int, int], _TraceWorkspace] = {}


def _workspace(shape) -> _TraceWorkspace:
    ws = _workspaces.get(shape)
    if ws is None:
        ws = _TraceWorkspace(shape)
        _workspaces[shape] = ws
    return ws


def trace_scan(
    block: np.ndarray,
    origin: tuple[int, int],
    ray_count: int,
    max_range_cells: float,
    dirs: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Low-level scan against a binary blocking grid.

    Returns (ranges_cells, terminals, full_ids, touched_ids, hit_ids) where the
    id arrays are freshly-allocated flat cell indices (deduplicated, in ray
    visit order). The origin cell is not included in any id list.
    """
    if dirs is None:
        dirs = ray_directions(ray_count)
    ws = _workspace(block.shape)
    epoch = ws.next_epoch()
    ranges = np.empty(ray_count, dtype=np.float64)
    terminals = np.empty(ray_count, dtype=np.uint8)
    n_full, n_touch, n_hit = _trace(
        block, origin[0], origin[1], dirs[0], dirs[1], max_range_cells,
        ranges, terminals, ws.stamp_full, ws.stamp_touch, epoch,
        ws.full_buf, ws.touch_buf, ws.hit_buf,
    )
    return (
        ranges,
        terminals,
        ws.full_buf[:n_full].copy(),
        ws.touch_buf[:n_touch].copy(),
        ws.hit_buf[:n_hit].copy(),
    )


def cast_scan(
    world: GroundTruth | np.ndarray,
    origin: tuple[int, int],
    ray_count: int = DEFAULT_RAY_COUNT,
    max_range: float = DEFAULT_MAX_RANGE_M,
) -> Scan:
    """Cast a 360° scan from the center of `origin` against an occupancy lookup.

    `world` may be a GroundTruth or any binary grid (nonzero blocks); passing
    a known map's OCCUPIED mask gives the unknown-transparent policy used by
    the naive gain estimator.
    """
    if isinstance(world, GroundTruth):
        block, cell = world.cells, world.cell_size
    else:
        block, cell = world, DEFAULT_CELL_SIZE
    if ray_count < 1:
        raise ValueError("ray_count must be >= 1")
    if max_range <= 0:
        raise ValueError("max_range must be > 0")
    if block[origin] != FREE:
        raise OriginBlockedError(f"scan origin {origin} is not free")
    mask = (block != FREE).astype(np.uint8)
    ranges, terminals, _, _, _ = trace_scan(mask, origin, ray_count, max_range / cell)
    return Scan(origin, ray_count, max_range, ranges * cell, terminals)


def integrate_scan(kmap: KnownMap, scan: Scan, world: GroundTruth) -> MapDelta:
    """Conservatively merge a scan into the map; returns the changed cells.

    Re-traces the scan geometry against `world`: fully traversed cells become
    FREE, hit cells become OCCUPIED, the origin cell is FREE (the robot is
    standing on it). Known cells never revert.
    """
    block = (world.cells == OCCUPIED).astype(np.uint8)
    _, _, full_ids, _, hit_ids = trace_scan(
        block, scan.origin, scan.ray_count, scan.max_range / world.cell_size
    )
    w = kmap.width
    flat = kmap.cells.reshape(-1)
    origin_id = scan.origin[0] * w + scan.origin[1]
    free_ids = np.concatenate((np.array([origin_id], dtype=np.int64), full_ids))
    world_flat = world.cells.reshape(-1)
    if (world_flat[free_ids] != FREE).any():
        raise InconsistentScanError("scan traversed a world-occupied cell")
    changed_free = free_ids[flat[free_ids] == UNKNOWN]
    changed_occ = hit_ids[flat[hit_ids] == UNKNOWN]
    flat[changed_free] = FREE
    flat[changed_occ] = OCCUPIED
    n = len(changed_free) + len(changed_occ)
    if n:
        kmap.version += 1
    ids = np.concatenate((changed_free, changed_occ))
    order = np.argsort(ids, kind="stable")
    ids = ids[order]
    states = np.concatenate(
        (np.full(len(changed_free), FREE, np.uint8), np.full(len(changed_occ), OCCUPIED, np.uint8))
    )[order]
    rc = np.stack((ids // w, ids % w), axis=1).astype(np.int32)
    return MapDelta(rc, states)
