"""Frontier detection and local-window filtering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FREE, UNKNOWN
from .mapping import KnownMap


@dataclass
class FrontierSet:
    cells: np.ndarray  # (n, 2) int32, row-major sorted
    map_version: int

    def __len__(self) -> int:
        return len(self.cells)

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(r), int(c)) for r, c in self.cells}


def detect_frontiers(kmap: KnownMap) -> FrontierSet:
    """FREE cells with at least one 4-adjacent UNKNOWN neighbor."""
    cells = kmap.cells
    unknown = cells == UNKNOWN
    near_unknown = np.zeros_like(unknown)
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[:, 1:] |= unknown[:, :-1]
    near_unknown[:, :-1] |= unknown[:, 1:]
    mask = (cells == FREE) & near_unknown
    rc = np.argwhere(mask).astype(np.int32)  # argwhere is row-major sorted
    return FrontierSet(rc, kmap.version)


def frontier_count(kmap: KnownMap) -> int:
    """|detect_frontiers| without materializing the cell list (hot path)."""
    cells = kmap.cells
    unknown = cells == UNKNOWN
    near_unknown = np.zeros_like(unknown)
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[:, 1:] |= unknown[:, :-1]
    near_unknown[:, :-1] |= unknown[:, 1:]
    return int(((cells == FREE) & near_unknown).sum())


def window_filter(
    frontiers: FrontierSet,
    center: tuple[int, int],
    window_m: float,
    cell_size: float,
) -> tuple[FrontierSet, FrontierSet]:
    """Partition by the axis-aligned square window centered on `center`.

    Cell membership is by cell-center coordinate with a closed boundary, so a
    frontier exactly on the window edge counts as inside.
    """
    if window_m <= 0:
        raise ValueError("window must be > 0")
    half_cells = (window_m / 2.0) / cell_size
    if len(frontiers.cells) == 0:
        empty = frontiers.cells.reshape(0, 2)
        return FrontierSet(empty, frontiers.map_version), FrontierSet(empty.copy(), frontiers.map_version)
    dr = np.abs(frontiers.cells[:, 0] - center[0])
    dc = np.abs(frontiers.cells[:, 1] - center[1])
    inside = (dr <= half_cells) & (dc <= half_cells)
    return (
        FrontierSet(frontiers.cells[inside], frontiers.map_version),
        FrontierSet(frontiers.cells[~inside], frontiers.map_version),
    )
