"""Oracle map completion inside a local window, range-limited beyond frontiers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import FREE, UNKNOWN
from .frontier import FrontierSet
from .mapping import KnownMap
from .world import GroundTruth


class DimensionMismatchError(ValueError):
    pass


@dataclass
class PlanningMap:
    """KnownMap plus a prediction overlay; the overlay never overwrites known
    cells and never feeds coverage metrics, only planner objectives."""

    base: KnownMap
    overlay_ids: np.ndarray  # flat indices of predicted cells
    overlay_states: np.ndarray  # uint8 FREE/OCCUPIED per overlay cell
    window_m: float
    c_p: float  # cells; may be inf

    def composed(self) -> np.ndarray:
        grid = self.base.cells.copy()
        grid.reshape(-1)[self.overlay_ids] = self.overlay_states
        return grid


def predict(
    kmap: KnownMap,
    frontiers: FrontierSet,
    source_world: GroundTruth,
    center: tuple[int, int],
    window_m: float,
    c_p: float,
) -> PlanningMap:
    """Reveal `source_world` for UNKNOWN cells in the window whose center lies
    within straight-line distance c_p cells of the nearest frontier cell."""
    if (source_world.height, source_world.width) != kmap.cells.shape:
        raise DimensionMismatchError(
            f"world {source_world.height}x{source_world.width} vs map {kmap.cells.shape}"
        )
    h, w = kmap.cells.shape
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.uint8))
    if c_p <= 0 or len(frontiers) == 0:
        return PlanningMap(kmap, *empty, window_m, c_p)

    half = (window_m / 2.0) / kmap.cell_size
    r_lo = max(0, math.ceil(center[0] - half))
    r_hi = min(h - 1, math.floor(center[0] + half))
    c_lo = max(0, math.ceil(center[1] - half))
    c_hi = min(w - 1, math.floor(center[1] + half))

    unknown = kmap.cells == UNKNOWN
    in_window = np.zeros((h, w), dtype=bool)
    in_window[r_lo : r_hi + 1, c_lo : c_hi + 1] = True
    candidates = unknown & in_window
    if not math.isinf(c_p):
        # exact integer squared distances to the nearest frontier cell
        not_frontier = np.ones((h, w), dtype=bool)
        not_frontier[frontiers.cells[:, 0], frontiers.cells[:, 1]] = False
        nearest = ndimage.distance_transform_edt(not_frontier, return_distances=False, return_indices=True)
        d2 = (nearest[0] - np.arange(h)[:, None]) ** 2 + (nearest[1] - np.arange(w)[None, :]) ** 2
        candidates &= d2 <= int(c_p) ** 2
    ids = np.flatnonzero(candidates.reshape(-1))
    states = source_world.cells.reshape(-1)[ids]
    return PlanningMap(kmap, ids, states.astype(np.uint8), window_m, c_p)


def planning_traversable(pmap: PlanningMap) -> np.ndarray:
    """Known-FREE plus predicted-FREE cells."""
    trav = pmap.base.cells == FREE
    flat = trav.reshape(-1)
    flat[pmap.overlay_ids[pmap.overlay_states == FREE]] = True
    return trav
