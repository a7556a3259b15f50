"""Shared grid primitives: cell states, metric steps, connectivity helpers."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

FREE = 0
OCCUPIED = 1
UNKNOWN = 2

DEFAULT_CELL_SIZE = 0.25  # meters per cell edge

SQRT2 = float(np.sqrt(2.0))

# 8-neighborhood, fixed row-major order. Diagonals carry their two shared
# orthogonal offsets for the corner rule.
NEIGHBORS_8 = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)
DIAG_ORTHO = {
    (-1, -1): ((-1, 0), (0, -1)),
    (-1, 1): ((-1, 0), (0, 1)),
    (1, -1): ((1, 0), (0, -1)),
    (1, 1): ((1, 0), (0, 1)),
}

_STRUCT_8 = np.ones((3, 3), dtype=bool)


def step_length(dr: int, dc: int, cell_size: float) -> float:
    return cell_size * SQRT2 if dr != 0 and dc != 0 else cell_size


def flat_index(r: int, c: int, width: int) -> int:
    return r * width + c


def free_components(occ: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 8-connected FREE components of a binary occupancy grid."""
    labels, count = ndimage.label(occ == FREE, structure=_STRUCT_8)
    return labels, count


def largest_free_component(occ: np.ndarray) -> np.ndarray:
    """Boolean mask of the largest 8-connected FREE component (empty if none)."""
    labels, count = free_components(occ)
    if count == 0:
        return np.zeros_like(occ, dtype=bool)
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=range(1, count + 1))
    return labels == (int(np.argmax(sizes)) + 1)


def reachable_free(occ: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """Cells reachable from `start` through FREE cells by 8-connected moves,
    where a diagonal move is blocked if both shared orthogonal cells are
    non-FREE (no squeezing through corners).

    This matches the traversability rule used for path planning, so it gives
    the exact set of cells a robot starting at `start` can ever stand on.
    """
    h, w = occ.shape
    free = occ == FREE
    if not free[start]:
        return np.zeros_like(free)
    seen = np.zeros_like(free)
    seen[start] = True
    stack = [start]
    while stack:
        r, c = stack.pop()
        for dr, dc in NEIGHBORS_8:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or seen[nr, nc] or not free[nr, nc]:
                continue
            if dr != 0 and dc != 0:
                (o1r, o1c), (o2r, o2c) = DIAG_ORTHO[(dr, dc)]
                if not free[r + o1r, c + o1c] and not free[r + o2r, c + o2c]:
                    continue
            seen[nr, nc] = True
            stack.append((nr, nc))
    return seen


def grid_to_text(cells: np.ndarray, starts: set[tuple[int, int]] | None = None) -> str:
    """Serialize a grid to the ASCII map format ('#', '.', 'S', '?' for UNKNOWN)."""
    chars = {FREE: ".", OCCUPIED: "#", UNKNOWN: "?"}
    starts = starts or set()
    lines = []
    for r in range(cells.shape[0]):
        row = []
        for c in range(cells.shape[1]):
            row.append("S" if (r, c) in starts else chars[int(cells[r, c])])
        lines.append("".join(row))
    return "\n".join(lines) + "\n"
