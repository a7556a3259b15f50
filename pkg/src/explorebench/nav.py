"""Exact shortest-path machinery on the 8-connected grid.

Distances are metric (axis step = cell_size, diagonal = cell_size * sqrt(2)).
A diagonal step is disallowed when both shared orthogonal neighbors are
non-traversable, so paths never squeeze through wall corners.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .grid import SQRT2
from .mapping import KnownMap
from .grid import FREE


class EmptySourcesError(ValueError):
    pass


class SourceBlockedError(ValueError):
    pass


class UnreachableError(ValueError):
    pass


@dataclass
class DistanceField:
    distances: np.ndarray  # (h, w) float64 meters, inf where unreachable
    sources: list[tuple[int, int]] | np.ndarray
    traversable: str  # predicate label, e.g. "map-free" or "all-cells"
    cell_size: float


@dataclass
class Path:
    cells: list[tuple[int, int]]
    length: float


@njit(cache=True)
def _heap_push(heap_d, heap_n, size, d, n):
    i = size
    heap_d[i] = d
    heap_n[i] = n
    while i > 0:
        p = (i - 1) >> 1
        if heap_d[p] < heap_d[i] or (heap_d[p] == heap_d[i] and heap_n[p] <= heap_n[i]):
            break
        heap_d[p], heap_d[i] = heap_d[i], heap_d[p]
        heap_n[p], heap_n[i] = heap_n[i], heap_n[p]
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(heap_d, heap_n, size):
    d = heap_d[0]
    n = heap_n[0]
    size -= 1
    heap_d[0] = heap_d[size]
    heap_n[0] = heap_n[size]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        best = i
        if l < size and (heap_d[l] < heap_d[best] or (heap_d[l] == heap_d[best] and heap_n[l] < heap_n[best])):
            best = l
        if r < size and (heap_d[r] < heap_d[best] or (heap_d[r] == heap_d[best] and heap_n[r] < heap_n[best])):
            best = r
        if best == i:
            break
        heap_d[best], heap_d[i] = heap_d[i], heap_d[best]
        heap_n[best], heap_n[i] = heap_n[i], heap_n[best]
        i = best
    return d, n, size


@njit(cache=True)
def _dijkstra(trav, h, w, src_ids, step_ax, step_di, dist):
    """Multi-source Dijkstra over a flat traversability mask.

    dist must come in preset to inf; sources are set to 0. Queue ties break on
    the lower cell index for determinism.
    """
    n = h * w
    cap = 10 * n + 16
    heap_d = np.empty(cap, dtype=np.float64)
    heap_n = np.empty(cap, dtype=np.int64)
    size = 0
    for i in range(src_ids.shape[0]):
        s = src_ids[i]
        dist[s] = 0.0
        size = _heap_push(heap_d, heap_n, size, 0.0, s)
    while size > 0:
        d, node, size = _heap_pop(heap_d, heap_n, size)
        if d > dist[node]:
            continue
        r = node // w
        c = node % w
        # axis neighbors
        for k in range(4):
            if k == 0:
                nr, nc = r - 1, c
            elif k == 1:
                nr, nc = r, c - 1
            elif k == 2:
                nr, nc = r, c + 1
            else:
                nr, nc = r + 1, c
            if 0 <= nr < h and 0 <= nc < w:
                nid = nr * w + nc
                if trav[nid]:
                    nd = d + step_ax
                    if nd < dist[nid]:
                        dist[nid] = nd
                        size = _heap_push(heap_d, heap_n, size, nd, nid)
        # diagonal neighbors with the corner rule
        for k in range(4):
            if k == 0:
                nr, nc = r - 1, c - 1
            elif k == 1:
                nr, nc = r - 1, c + 1
            elif k == 2:
                nr, nc = r + 1, c - 1
            else:
                nr, nc = r + 1, c + 1
            if 0 <= nr < h and 0 <= nc < w:
                nid = nr * w + nc
                if trav[nid]:
                    if not trav[nr * w + c] and not trav[r * w + nc]:
                        continue
                    nd = d + step_di
                    if nd < dist[nid]:
                        dist[nid] = nd
                        size = _heap_push(heap_d, heap_n, size, nd, nid)


@njit(cache=True)
def _chamfer_pass(dist, trav, h, w, step_ax, step_di, forward, corner_rule):
    """One raster relaxation sweep; returns True if any distance changed."""
    changed = False
    if forward:
        r_start, r_end, r_step = 0, h, 1
        c_start, c_end, c_step = 0, w, 1
    else:
        r_start, r_end, r_step = h - 1, -1, -1
        c_start, c_end, c_step = w - 1, -1, -1
    for r in range(r_start, r_end, r_step):
        for c in range(c_start, c_end, c_step):
            i = r * w + c
            if not trav[i]:
                continue
            best = dist[i]
            # axis predecessors for this sweep direction
            pr = r - r_step
            pc = c - c_step
            if 0 <= pr < h:
                j = pr * w + c
                if trav[j] and dist[j] + step_ax < best:
                    best = dist[j] + step_ax
            if 0 <= pc < w:
                j = r * w + pc
                if trav[j] and dist[j] + step_ax < best:
                    best = dist[j] + step_ax
            # the two diagonals in the processed half-plane
            for dc in (-1, 1):
                nc = c + dc
                if 0 <= pr < h and 0 <= nc < w:
                    j = pr * w + nc
                    if trav[j]:
                        if corner_rule and not trav[pr * w + c] and not trav[r * w + nc]:
                            continue
                        if dist[j] + step_di < best:
                            best = dist[j] + step_di
            if best < dist[i]:
                dist[i] = best
                changed = True
    return changed


@njit(cache=True)
def _chamfer_until_stable(dist, trav, h, w, step_ax, step_di, corner_rule):
    while True:
        ch1 = _chamfer_pass(dist, trav, h, w, step_ax, step_di, True, corner_rule)
        ch2 = _chamfer_pass(dist, trav, h, w, step_ax, step_di, False, corner_rule)
        if not (ch1 or ch2):
            break


def distance_field(
    traversable: np.ndarray,
    sources: list[tuple[int, int]],
    cell_size: float,
    label: str = "custom",
) -> DistanceField:
    """Exact multi-source shortest-path distances over a boolean mask."""
    if len(sources) == 0:
        raise EmptySourcesError("need at least one source")
    h, w = traversable.shape
    for s in sources:
        if not traversable[s]:
            raise SourceBlockedError(f"source {s} is not traversable")
    dist = np.full(h * w, np.inf, dtype=np.float64)
    src_ids = np.array([r * w + c for r, c in sources], dtype=np.int64)
    trav = np.ascontiguousarray(traversable.reshape(-1))
    _dijkstra(trav, h, w, src_ids, cell_size, cell_size * SQRT2, dist)
    return DistanceField(dist.reshape(h, w), list(sources), label, cell_size)


def clearance_field(kmap: KnownMap) -> DistanceField:
    """Grid distance from each FREE cell to the nearest OCCUPIED/UNKNOWN cell.

    All cells are traversable for this field, so the two-pass chamfer sweep is
    exact; an all-FREE map legitimately yields inf everywhere.
    """
    h, w = kmap.height, kmap.width
    non_free = kmap.cells != FREE
    dist = np.where(non_free, 0.0, np.inf).reshape(-1)
    trav = np.ones(h * w, dtype=bool)
    _chamfer_until_stable(dist, trav, h, w, kmap.cell_size, kmap.cell_size * SQRT2, False)
    return DistanceField(dist.reshape(h, w), np.argwhere(non_free), "all-cells", kmap.cell_size)


_AXIS_EPS = 1e-9


def extract_path(
    field: DistanceField,
    goal: tuple[int, int],
    clearance: DistanceField,
    traversable: np.ndarray,
) -> Path:
    """Backtrack a shortest path from `goal` to the field's source set.

    Among predecessors that lie on a shortest path, the one with the greatest
    clearance wins; remaining ties go to the lowest cell index, so extraction
    is deterministic.
    """
    h, w = field.distances.shape
    d = field.distances
    if not np.isfinite(d[goal]):
        raise UnreachableError(f"goal {goal} unreachable")
    step_ax = field.cell_size
    step_di = field.cell_size * SQRT2
    cells = [goal]
    r, c = goal
    while d[r, c] > 0.0:
        best = None
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                nr, nc = r + dr, c + dc
                if not (0 <= nr < h and 0 <= nc < w) or not traversable[nr, nc]:
                    continue
                if dr != 0 and dc != 0:
                    if not traversable[nr, c] and not traversable[r, nc]:
                        continue
                    step = step_di
                else:
                    step = step_ax
                if abs(d[nr, nc] + step - d[r, c]) <= _AXIS_EPS:
                    key = (-clearance.distances[nr, nc], nr * w + nc)
                    if best is None or key < best[0]:
                        best = (key, (nr, nc))
        if best is None:
            raise UnreachableError(f"no shortest-path predecessor at {(r, c)}")
        r, c = best[1]
        cells.append((r, c))
    cells.reverse()
    return Path(cells, float(d[goal]))


def predecessor_tree(
    field: DistanceField,
    clearance: DistanceField,
    traversable: np.ndarray,
) -> np.ndarray:
    """Flat predecessor index per cell (-1 at sources/unreachable), using the
    same greedy clearance-then-lowest-index rule as extract_path, so walking
    the tree from any goal reproduces extract_path exactly."""
    h, w = field.distances.shape
    d = field.distances.reshape(-1)
    clr = clearance.distances.reshape(-1)
    trav = traversable.reshape(-1)
    pred = np.full(h * w, -1, dtype=np.int64)
    _pred_fill(d, clr, trav, h, w, field.cell_size, field.cell_size * SQRT2, pred)
    return pred


@njit(cache=True)
def _pred_fill(d, clr, trav, h, w, step_ax, step_di, pred):
    for r in range(h):
        for c in range(w):
            i = r * w + c
            if not trav[i] or not np.isfinite(d[i]) or d[i] == 0.0:
                continue
            best_clr = -1.0
            best_idx = -1
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    nr, nc = r + dr, c + dc
                    if not (0 <= nr < h and 0 <= nc < w):
                        continue
                    j = nr * w + nc
                    if not trav[j]:
                        continue
                    if dr != 0 and dc != 0:
                        if not trav[nr * w + c] and not trav[r * w + nc]:
                            continue
                        step = step_di
                    else:
                        step = step_ax
                    if abs(d[j] + step - d[i]) <= 1e-9:
                        if clr[j] > best_clr or (clr[j] == best_clr and j < best_idx):
                            best_clr = clr[j]
                            best_idx = j
            pred[i] = best_idx
