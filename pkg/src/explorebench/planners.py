"""The three frontier-selection rules: nearest frontier, information-gain
maximization (naive/true estimators), and distance advantage."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import ndimage

from .grid import FREE, OCCUPIED, SQRT2, UNKNOWN
from .mapping import DEFAULT_MAX_RANGE_M, DEFAULT_RAY_COUNT, KnownMap, ray_directions, trace_scan
from .nav import DistanceField, Path, _chamfer_until_stable, predecessor_tree
from .frontier import FrontierSet
from .predictor import PlanningMap, planning_traversable
from .world import GroundTruth

NEAREST_FRONTIER = "nearest_frontier"
INFO_GAIN = "info_gain"
DISTANCE_ADVANTAGE = "distance_advantage"
METHODS = (NEAREST_FRONTIER, INFO_GAIN, DISTANCE_ADVANTAGE)

GAIN_NAIVE = "naive"
GAIN_TRUE = "true"


class NoReachableFrontierError(RuntimeError):
    pass


class InvalidPathError(ValueError):
    pass


@dataclass
class PlannerConfig:
    method: str
    lam: float = 1.0  # gain affinity (info gain only)
    gain_mode: str = GAIN_NAIVE
    window_m: float = 30.0
    c_p: float = math.inf  # prediction range in cells beyond the frontier

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not math.isfinite(self.lam):
            raise ValueError("lambda must be finite")
        if self.window_m <= 0:
            raise ValueError("window must be > 0")
        if self.gain_mode not in (GAIN_NAIVE, GAIN_TRUE):
            raise ValueError(f"unknown gain mode {self.gain_mode!r}")


@dataclass
class Decision:
    target: tuple[int, int]
    objective_value: float
    used_fallback: bool = False


@dataclass
class GainEstimate:
    cells_gained: int
    mode: str


def plan_nearest_frontier(robot_field: DistanceField, frontiers: FrontierSet) -> Decision:
    """argmin over reachable frontiers of d(s, t); ties to the lowest cell index."""
    if len(frontiers) == 0:
        raise NoReachableFrontierError("no frontiers")
    d = robot_field.distances[frontiers.cells[:, 0], frontiers.cells[:, 1]]
    if not np.isfinite(d).any():
        raise NoReachableFrontierError("no reachable frontier")
    i = int(np.argmin(d))  # first minimum in row-major order = lowest index
    return Decision((int(frontiers.cells[i, 0]), int(frontiers.cells[i, 1])), float(d[i]))


# --- gain estimation -----------------------------------------------------------


def _validate_path(kmap: KnownMap, path: Path) -> None:
    prev = None
    for r, c in path.cells:
        if kmap.cells[r, c] != FREE:
            raise InvalidPathError(f"path cell {(r, c)} is not known-FREE")
        if prev is not None:
            if max(abs(r - prev[0]), abs(c - prev[1])) != 1:
                raise InvalidPathError(f"path cells {prev} -> {(r, c)} not 8-adjacent")
        prev = (r, c)


def estimate_gain(
    kmap: KnownMap,
    world: GroundTruth,
    path: Path,
    mode: str,
    ray_count: int = DEFAULT_RAY_COUNT,
    max_range: float = DEFAULT_MAX_RANGE_M,
) -> GainEstimate:
    """Newly observed cells accumulated over scans taken at every path cell.

    TRUE casts against `world`; NAIVE casts against the known map treating
    UNKNOWN as transparent and counts UNKNOWN cells touched within range.
    """
    _validate_path(kmap, path)
    max_range_cells = max_range / kmap.cell_size
    dirs = ray_directions(ray_count)
    if mode == GAIN_TRUE:
        block = (world.cells == OCCUPIED).astype(np.uint8)
    elif mode == GAIN_NAIVE:
        block = (kmap.cells == OCCUPIED).astype(np.uint8)
    else:
        raise ValueError(f"unknown gain mode {mode!r}")
    unknown = (kmap.cells == UNKNOWN).reshape(-1).copy()
    gained = 0
    for p in path.cells:
        _, _, full_ids, touched_ids, hit_ids = trace_scan(block, p, ray_count, max_range_cells, dirs)
        ids = np.concatenate((full_ids, hit_ids)) if mode == GAIN_TRUE else touched_ids
        new = ids[unknown[ids]]
        gained += len(new)
        unknown[new] = False
    return GainEstimate(gained, mode)


class GainCache:
    """Per-episode cache of scan footprints for gain evaluation.

    True-mode footprints (cells a world scan would make known) are static for
    a fixed world. Naive-mode footprints depend on the known-OCCUPIED set, so
    entries are stamped and conservatively invalidated whenever a cell within
    sensor range of the scan origin becomes OCCUPIED.
    """

    def __init__(self, world: GroundTruth, ray_count: int, max_range: float):
        self.world = world
        self.ray_count = ray_count
        self.max_range = max_range
        self.max_range_cells = max_range / world.cell_size
        self.dirs = ray_directions(ray_count)
        self.world_block = (world.cells == OCCUPIED).astype(np.uint8)
        self.true_ids: dict[int, np.ndarray] = {}
        self.naive_ids: dict[int, tuple[int, np.ndarray]] = {}
        self.occ_epoch = np.zeros(world.height * world.width, dtype=np.int64)
        self.epoch = 0

    def note_occupied(self, rc: np.ndarray) -> None:
        """Record newly known-OCCUPIED cells; invalidates nearby naive entries."""
        if len(rc) == 0:
            return
        self.epoch += 1
        h, w = self.world.height, self.world.width
        grid = self.occ_epoch.reshape(h, w)
        reach = int(self.max_range_cells) + 1
        for r, c in rc:
            grid[max(0, r - reach) : r + reach + 1, max(0, c - reach) : c + reach + 1] = self.epoch

    def true_footprint(self, pid: int, unknown_flat: np.ndarray) -> np.ndarray:
        """Cells a world scan at `pid` makes known, filtered to cells that were
        UNKNOWN when first traced. Valid later too: unknown only shrinks, and
        gain counting re-filters against the current unknown set."""
        ids = self.true_ids.get(pid)
        if ids is None:
            p = (pid // self.world.width, pid % self.world.width)
            _, _, full_ids, _, hit_ids = trace_scan(
                self.world_block, p, self.ray_count, self.max_range_cells, self.dirs
            )
            ids = np.concatenate((full_ids, hit_ids))
            ids = ids[unknown_flat[ids]]
            self.true_ids[pid] = ids
        return ids

    def naive_footprint(self, pid: int, map_block: np.ndarray, unknown_flat: np.ndarray) -> np.ndarray:
        entry = self.naive_ids.get(pid)
        stamp = int(self.occ_epoch[pid])
        if entry is not None and entry[0] >= stamp:
            return entry[1]
        p = (pid // self.world.width, pid % self.world.width)
        _, _, _, touched_ids, _ = trace_scan(
            map_block, p, self.ray_count, self.max_range_cells, self.dirs
        )
        touched_ids = touched_ids[unknown_flat[touched_ids]]
        self.naive_ids[pid] = (self.epoch, touched_ids)
        return touched_ids


@njit(cache=True)
def _tree_gains(parent_pos, vis_offsets, vis_ids, unknown, mark, epoch, cum, undo_buf):
    """Cumulative newly-observed counts along root->node chains of a preorder
    tree. Each node's footprint is processed once; an undo stack restores the
    chain state when the walk backtracks."""
    n = parent_pos.shape[0]
    stack = np.empty(n, dtype=np.int64)
    undo_lo = np.empty(n, dtype=np.int64)
    undo_hi = np.empty(n, dtype=np.int64)
    sp = -1
    top = 0
    for i in range(n):
        while sp >= 0 and stack[sp] != parent_pos[i]:
            p = stack[sp]
            for k in range(undo_lo[p], undo_hi[p]):
                mark[undo_buf[k]] = 0
            top = undo_lo[p]
            sp -= 1
        base = cum[parent_pos[i]] if parent_pos[i] >= 0 else 0
        lo = top
        for k in range(vis_offsets[i], vis_offsets[i + 1]):
            cell = vis_ids[k]
            if unknown[cell] and mark[cell] != epoch:
                mark[cell] = epoch
                undo_buf[top] = cell
                top += 1
        undo_lo[i] = lo
        undo_hi[i] = top
        cum[i] = base + (top - lo)
        sp += 1
        stack[sp] = i


class _IgWorkspace:
    def __init__(self, n):
        self.mark = np.zeros(n, dtype=np.int64)
        self.stamp = np.zeros(n, dtype=np.int64)
        self.node_buf = np.empty(n, dtype=np.int64)
        self.epoch = 0


_ig_workspaces: dict[int, _IgWorkspace] = {}


@njit(cache=True)
def _build_tree(pred, goal_ids, robot_id, stamp, epoch, node_buf):
    """Preorder walk of the union of pred-chains from each goal to the root.

    Returns (order, parent_pos, goal_pos): preorder node ids, each node's
    parent position in the preorder, and each goal's position. Children are
    visited in ascending cell-id order for determinism.
    """
    n_nodes = 0
    for gi in range(goal_ids.shape[0]):
        node = goal_ids[gi]
        while stamp[node] != epoch:
            stamp[node] = epoch
            node_buf[n_nodes] = node
            n_nodes += 1
            if node == robot_id:
                break
            node = pred[node]
    nodes = np.sort(node_buf[:n_nodes])
    root_pos = np.searchsorted(nodes, robot_id)
    child_count = np.zeros(n_nodes, dtype=np.int64)
    for i in range(n_nodes):
        if nodes[i] != robot_id:
            child_count[np.searchsorted(nodes, pred[nodes[i]])] += 1
    child_off = np.zeros(n_nodes + 1, dtype=np.int64)
    for i in range(n_nodes):
        child_off[i + 1] = child_off[i] + child_count[i]
    children = np.empty(n_nodes, dtype=np.int64)
    fill = child_off[:-1].copy()
    for i in range(n_nodes):  # ascending i keeps each child list ascending
        if nodes[i] != robot_id:
            p = np.searchsorted(nodes, pred[nodes[i]])
            children[fill[p]] = i
            fill[p] += 1
    order = np.empty(n_nodes, dtype=np.int64)
    parent_pos = np.empty(n_nodes, dtype=np.int64)
    pos_in_order = np.empty(n_nodes, dtype=np.int64)
    stack = np.empty(2 * n_nodes + 1, dtype=np.int64)
    sp = 0
    stack[0] = root_pos
    stack[1] = -1
    sp = 2
    k = 0
    while sp > 0:
        ppos = stack[sp - 1]
        ni = stack[sp - 2]
        sp -= 2
        order[k] = nodes[ni]
        parent_pos[k] = ppos
        pos_in_order[ni] = k
        for ci in range(child_off[ni + 1] - 1, child_off[ni] - 1, -1):
            stack[sp] = children[ci]
            stack[sp + 1] = k
            sp += 2
        k += 1
    goal_pos = np.empty(goal_ids.shape[0], dtype=np.int64)
    for gi in range(goal_ids.shape[0]):
        goal_pos[gi] = pos_in_order[np.searchsorted(nodes, goal_ids[gi])]
    return order, parent_pos, goal_pos


def gain_along_tree(
    kmap: KnownMap,
    robot_id: int,
    goal_ids: np.ndarray,
    pred: np.ndarray,
    gain_mode: str,
    cache: GainCache,
) -> np.ndarray:
    """Gain of the predecessor-tree path from the robot to each goal cell.

    Equivalent to estimate_gain over each extracted path, but shares the scan
    footprints of common path prefixes and skips cells provably out of sensor
    range of any UNKNOWN cell. Returns counts aligned with goal_ids.
    """
    h, w = kmap.cells.shape
    unknown_grid = kmap.cells == UNKNOWN
    if not unknown_grid.any():
        return np.zeros(len(goal_ids), dtype=np.int64)
    unknown_flat = unknown_grid.reshape(-1)
    ws = _ig_workspaces.get(h * w)
    if ws is None:
        ws = _IgWorkspace(h * w)
        _ig_workspaces[h * w] = ws
    ws.epoch += 1
    order, parent_pos, goal_pos = _build_tree(
        pred, goal_ids, robot_id, ws.stamp, ws.epoch, ws.node_buf
    )
    # cells farther from UNKNOWN than the sensor reaches cannot contribute
    edt_flat = ndimage.distance_transform_edt(~unknown_grid).reshape(-1)
    reach = cache.max_range_cells + 1.0
    map_block = (kmap.cells == OCCUPIED).astype(np.uint8) if gain_mode == GAIN_NAIVE else None
    true_mode = gain_mode == GAIN_TRUE
    vis_lists = []
    empty = np.empty(0, dtype=np.int64)
    for node in order:
        node = int(node)
        if edt_flat[node] > reach:
            vis_lists.append(empty)
        elif true_mode:
            vis_lists.append(cache.true_footprint(node, unknown_flat))
        else:
            vis_lists.append(cache.naive_footprint(node, map_block, unknown_flat))
    lens = np.fromiter((len(v) for v in vis_lists), dtype=np.int64, count=len(vis_lists))
    vis_offsets = np.zeros(len(order) + 1, dtype=np.int64)
    np.cumsum(lens, out=vis_offsets[1:])
    vis_ids = np.concatenate(vis_lists) if vis_offsets[-1] else empty
    ws.epoch += 1
    cum = np.empty(len(order), dtype=np.int64)
    undo_buf = np.empty(max(1, int(vis_offsets[-1])), dtype=np.int64)
    _tree_gains(parent_pos, vis_offsets, vis_ids, unknown_flat, ws.mark, ws.epoch, cum, undo_buf)
    return cum[goal_pos]


def plan_info_gain(
    kmap: KnownMap,
    world: GroundTruth,
    robot_field: DistanceField,
    frontiers: FrontierSet,
    lam: float,
    gain_mode: str,
    *,
    clearance: DistanceField,
    traversable: np.ndarray,
    cache: GainCache | None = None,
    ray_count: int = DEFAULT_RAY_COUNT,
    max_range: float = DEFAULT_MAX_RANGE_M,
) -> Decision:
    """argmax over reachable frontiers of lam * ln(max(G, 1)) - d(s, t)."""
    if len(frontiers) == 0:
        raise NoReachableFrontierError("no frontiers")
    d = robot_field.distances[frontiers.cells[:, 0], frontiers.cells[:, 1]]
    finite = np.isfinite(d)
    if not finite.any():
        raise NoReachableFrontierError("no reachable frontier")
    if lam == 0.0:
        # gain term identically zero: the argmax reduces to nearest frontier
        i = int(np.argmin(np.where(finite, d, np.inf)))
        return Decision((int(frontiers.cells[i, 0]), int(frontiers.cells[i, 1])), float(-d[i]))
    if cache is None:
        cache = GainCache(world, ray_count, max_range)
    pred = predecessor_tree(robot_field, clearance, traversable)
    h, w = kmap.cells.shape
    sources = robot_field.sources
    robot_id = sources[0][0] * w + sources[0][1]
    cells = frontiers.cells[finite]
    goal_ids = (cells[:, 0].astype(np.int64) * w + cells[:, 1]).astype(np.int64)
    gains = gain_along_tree(kmap, robot_id, goal_ids, pred, gain_mode, cache)
    dist = d[finite]
    best = None
    for i in range(len(cells)):
        g = max(int(gains[i]), 1)  # clamp: ln is undefined at G=0
        obj = lam * math.log(g) - float(dist[i])
        if best is None or obj > best[0]:
            best = (obj, (int(cells[i, 0]), int(cells[i, 1])))
    return Decision(best[1], best[0])


# --- distance advantage ----------------------------------------------------------


@njit(cache=True)
def _da_field_sum(trav, hb, wb, src, r_mask, step_ax, step_di, dist):
    """Distance field from one source over a reachable-set bounding box;
    returns the sum over R (flat row-major order, for cross-check stability)."""
    n = hb * wb
    for i in range(n):
        dist[i] = np.inf
    dist[src] = 0.0
    _chamfer_until_stable(dist, trav, hb, wb, step_ax, step_di, True)
    s = 0.0
    for i in range(n):
        if r_mask[i]:
            s += dist[i]
    return s


_BOUND_MARGIN = 1e-9  # absorbs float slop in the triangle-inequality bounds


def plan_distance_advantage(
    pmap: PlanningMap,
    robot: tuple[int, int],
    frontiers_inside: FrontierSet,
    frontiers_outside: FrontierSet,
    window_m: float,
    *,
    known_robot_field: DistanceField,
) -> Decision:
    """argmax over window frontiers of mean distance to reachable window cells
    minus distance from the robot, on the prediction-augmented planning map.

    Frontier fields are evaluated best-first: sum(d(t, R)) <= sum(d(a, R)) +
    |R| * d(a, t) for any already-evaluated anchor a, so most candidates are
    discarded without computing their field. The bound keeps a small margin,
    which makes the pruning exact: any candidate within the margin of the
    incumbent is still evaluated exactly.

    Falls back to the nearest known-map-reachable frontier (outside ones
    first) when no window frontier is reachable within the window.
    """
    if len(frontiers_inside) == 0 and len(frontiers_outside) == 0:
        raise NoReachableFrontierError("no frontiers")
    kmap = pmap.base
    cell = kmap.cell_size
    h, w = kmap.cells.shape
    half = (window_m / 2.0) / cell
    r_lo = max(0, math.ceil(robot[0] - half))
    r_hi = min(h - 1, math.floor(robot[0] + half))
    c_lo = max(0, math.ceil(robot[1] - half))
    c_hi = min(w - 1, math.floor(robot[1] + half))
    hs, ws_ = r_hi - r_lo + 1, c_hi - c_lo + 1
    trav = planning_traversable(pmap)[r_lo : r_hi + 1, c_lo : c_hi + 1]
    trav_flat = np.ascontiguousarray(trav.reshape(-1))

    robot_dist = np.full(hs * ws_, np.inf, dtype=np.float64)
    robot_dist[(robot[0] - r_lo) * ws_ + (robot[1] - c_lo)] = 0.0
    _chamfer_until_stable(robot_dist, trav_flat, hs, ws_, cell, cell * SQRT2, True)
    r_mask = np.isfinite(robot_dist)

    reachable_idx = np.empty(0, dtype=np.int64)
    if len(frontiers_inside):
        slab_ids = (frontiers_inside.cells[:, 0].astype(np.int64) - r_lo) * ws_ + (
            frontiers_inside.cells[:, 1] - c_lo
        )
        reachable_idx = np.flatnonzero(np.isfinite(robot_dist[slab_ids]))
    if len(reachable_idx):
        n_reach = int(r_mask.sum())
        # crop every field computation to the bounding box of R
        rr, cc = np.divmod(np.flatnonzero(r_mask), ws_)
        rb0, rb1 = int(rr.min()), int(rr.max())
        cb0, cb1 = int(cc.min()), int(cc.max())
        hb, wb = rb1 - rb0 + 1, cb1 - cb0 + 1
        trav_bb = np.ascontiguousarray(trav[rb0 : rb1 + 1, cb0 : cb1 + 1].reshape(-1))
        r_mask_bb = np.ascontiguousarray(r_mask.reshape(hs, ws_)[rb0 : rb1 + 1, cb0 : cb1 + 1].reshape(-1))
        dist_buf = np.empty(hb * wb, dtype=np.float64)

        f_slab = slab_ids[reachable_idx]
        f_bb = (f_slab // ws_ - rb0) * wb + (f_slab % ws_ - cb0)
        d_robot = robot_dist[f_slab]
        nf = len(f_slab)
        ub = np.full(nf, np.inf)
        done = np.zeros(nf, dtype=bool)
        best_phi = -np.inf
        best_k = -1
        while True:
            masked = np.where(done, -np.inf, ub)
            cand = int(np.argmax(masked))  # highest bound, lowest index on ties
            if done[cand] or masked[cand] < best_phi - _BOUND_MARGIN:
                break
            s = _da_field_sum(trav_bb, hb, wb, int(f_bb[cand]), r_mask_bb, cell, cell * SQRT2, dist_buf)
            done[cand] = True
            phi = s / n_reach - d_robot[cand]
            if phi > best_phi or (phi == best_phi and cand < best_k):
                best_phi, best_k = phi, cand
            todo = ~done
            if todo.any():
                new_ub = s / n_reach + dist_buf[f_bb[todo]] - d_robot[todo]
                ub[todo] = np.minimum(ub[todo], new_ub)
        i = int(reachable_idx[best_k])
        target = (int(frontiers_inside.cells[i, 0]), int(frontiers_inside.cells[i, 1]))
        return Decision(target, float(best_phi))

    # window exhausted: nearest reachable frontier outside, then any reachable
    for fs in (frontiers_outside, frontiers_inside):
        if len(fs) == 0:
            continue
        d = known_robot_field.distances[fs.cells[:, 0], fs.cells[:, 1]]
        if np.isfinite(d).any():
            i = int(np.argmin(np.where(np.isfinite(d), d, np.inf)))
            return Decision((int(fs.cells[i, 0]), int(fs.cells[i, 1])), float(d[i]), used_fallback=True)
    raise NoReachableFrontierError("no reachable frontier")
