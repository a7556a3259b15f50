"""Ground-truth environments: map file format, procedural generators, clutter."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import DEFAULT_CELL_SIZE, FREE, OCCUPIED, free_components, grid_to_text


class MapFormatError(ValueError):
    pass


class RaggedLinesError(MapFormatError):
    pass


class UnknownCharError(MapFormatError):
    pass


class NoStartError(MapFormatError):
    pass


class UnsealedBoundaryError(MapFormatError):
    pass


class DisconnectedStartsError(MapFormatError):
    pass


class TooSmallError(ValueError):
    pass


class GenerationFailedError(RuntimeError):
    pass


class PlacementExhaustedError(RuntimeError):
    pass


@dataclass
class GroundTruth:
    """Immutable binary occupancy of the full environment."""

    width: int
    height: int
    cells: np.ndarray  # uint8, FREE / OCCUPIED
    cell_size: float = DEFAULT_CELL_SIZE
    starts: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.cells.setflags(write=False)

    def is_free(self, r: int, c: int) -> bool:
        return self.cells[r, c] == FREE

    def to_text(self) -> str:
        return grid_to_text(self.cells, set(self.starts))


@dataclass
class ClutterSpec:
    count: int
    size: float = 1.0  # nominal triangle extent in meters
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("clutter count must be >= 0")
        if self.size <= 0:
            raise ValueError("clutter size must be > 0")


def _check_sealed(cells: np.ndarray) -> bool:
    return bool(
        (cells[0, :] == OCCUPIED).all()
        and (cells[-1, :] == OCCUPIED).all()
        and (cells[:, 0] == OCCUPIED).all()
        and (cells[:, -1] == OCCUPIED).all()
    )


def parse_env(text: str, cell_size: float = DEFAULT_CELL_SIZE) -> GroundTruth:
    """Parse the ASCII map format: '#' occupied, '.' free, 'S' free start cell."""
    if not text.strip():
        raise MapFormatError("empty map text")
    lines = text.splitlines()
    width = len(lines[0])
    for ln in lines:
        if len(ln) != width:
            raise RaggedLinesError(f"line length {len(ln)} != {width}")
        bad = set(ln) - {"#", ".", "S"}
        if bad:
            raise UnknownCharError(f"unexpected characters {sorted(bad)!r}")
    height = len(lines)
    cells = np.full((height, width), OCCUPIED, dtype=np.uint8)
    starts: list[tuple[int, int]] = []
    for r, ln in enumerate(lines):
        for c, ch in enumerate(ln):
            if ch in ".S":
                cells[r, c] = FREE
                if ch == "S":
                    starts.append((r, c))
    if not starts:
        raise NoStartError("map has no 'S' start cell")
    if not _check_sealed(cells):
        raise UnsealedBoundaryError("boundary cells must all be '#'")
    labels, _ = free_components(cells)
    first = labels[starts[0]]
    for s in starts[1:]:
        if labels[s] != first:
            raise DisconnectedStartsError(f"start {s} not connected to {starts[0]}")
    return GroundTruth(width, height, cells, cell_size, starts)


def _sample_starts(cells: np.ndarray, rng: np.random.Generator, n: int = 16) -> list[tuple[int, int]]:
    free_rc = np.argwhere(cells == FREE)
    n = min(n, len(free_rc))
    picks = rng.choice(len(free_rc), size=n, replace=False)
    return [tuple(map(int, free_rc[i])) for i in picks]


def _finalize(cells: np.ndarray, rng: np.random.Generator, cell_size: float, kind: str) -> GroundTruth:
    _, count = free_components(cells)
    if count != 1:
        raise GenerationFailedError(f"{kind}: expected one free component, got {count}")
    free_frac = float((cells == FREE).mean())
    if free_frac < 0.25:
        raise GenerationFailedError(f"{kind}: free area {free_frac:.0%} < 25%")
    starts = _sample_starts(cells, rng)
    h, w = cells.shape
    return GroundTruth(w, h, cells, cell_size, starts)


# --- office: BSP rooms with door gaps off corridors ---------------------------

_MIN_SPLIT = 10  # don't split regions smaller than this (cells)


def _punch_doors(cells, rng, fixed, span_lo, span_hi, cross):
    """Open 1-2 cell door gaps in the wall line at `fixed`; doors are sparse so
    rooms read as cubicles rather than open plan."""
    span = span_hi - span_lo
    n_doors = max(1, span // 24)
    for _ in range(n_doors):
        dw = int(rng.integers(1, 3))
        d0 = int(rng.integers(span_lo, span_hi - dw + 1))
        for k in range(dw):
            if cross:
                cells[d0 + k, fixed] = FREE
            else:
                cells[fixed, d0 + k] = FREE


def _split_office(cells, rng, r0, c0, r1, c1, depth):
    h, w = r1 - r0, c1 - c0
    if max(h, w) < _MIN_SPLIT:
        return
    if depth > 2 and rng.random() < 0.12:
        return  # leave an open hall
    vertical = w > h or (w == h and rng.random() < 0.5)
    for _ in range(12):
        if vertical:
            p = int(rng.integers(c0 + 4, c1 - 4))
            # wall must abut solid cells above and below, or it would seal a door
            if cells[r0 - 1, p] == OCCUPIED and cells[r1, p] == OCCUPIED:
                cells[r0:r1, p] = OCCUPIED
                _punch_doors(cells, rng, p, r0, r1, cross=True)
                _split_office(cells, rng, r0, c0, r1, p, depth + 1)
                _split_office(cells, rng, r0, p + 1, r1, c1, depth + 1)
                return
        else:
            p = int(rng.integers(r0 + 4, r1 - 4))
            if cells[p, c0 - 1] == OCCUPIED and cells[p, c1] == OCCUPIED:
                cells[p, c0:c1] = OCCUPIED
                _punch_doors(cells, rng, p, c0, c1, cross=False)
                _split_office(cells, rng, r0, c0, p, c1, depth + 1)
                _split_office(cells, rng, p + 1, c0, r1, c1, depth + 1)
                return


def _extra_doors(cells, rng, fraction=0.04):
    """Reopen straight wall cells with free space on both opposite sides,
    adding loops to the otherwise tree-like BSP connectivity."""
    h, w = cells.shape
    occ = cells == OCCUPIED
    cand = []
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            if not occ[r, c]:
                continue
            if cells[r - 1, c] == FREE and cells[r + 1, c] == FREE:
                cand.append((r, c))
            elif cells[r, c - 1] == FREE and cells[r, c + 1] == FREE:
                cand.append((r, c))
    if not cand:
        return
    k = max(1, int(len(cand) * fraction))
    picks = rng.choice(len(cand), size=min(k, len(cand)), replace=False)
    for i in picks:
        r, c = cand[i]
        cells[r, c] = FREE


def _gen_office(width, height, rng):
    cells = np.full((height, width), FREE, dtype=np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    _split_office(cells, rng, 1, 1, height - 1, width - 1, 0)
    _extra_doors(cells, rng)
    return cells


# --- cave: cellular automaton, largest component kept -------------------------

def _gen_cave(width, height, rng):
    occ = rng.random((height, width)) < 0.44
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    kernel = np.ones((3, 3), dtype=int)
    for _ in range(5):
        walls = ndimage.convolve(occ.astype(int), kernel, mode="constant", cval=1)
        occ = walls >= 5
        occ[0, :] = occ[-1, :] = True
        occ[:, 0] = occ[:, -1] = True
    cells = np.where(occ, OCCUPIED, FREE).astype(np.uint8)
    from .grid import largest_free_component

    keep = largest_free_component(cells)
    cells[(cells == FREE) & ~keep] = OCCUPIED
    return cells


# --- maze: depth-first spanning maze, 2-wide corridors, braided -----------------

def _gen_maze(width, height, rng, braid=0.12):
    # node lattice with pitch 3: 2-cell corridor + 1-cell wall
    ni = (height - 2 + 1) // 3
    nj = (width - 2 + 1) // 3
    cells = np.full((height, width), OCCUPIED, dtype=np.uint8)

    def carve_node(i, j):
        r, c = 1 + 3 * i, 1 + 3 * j
        cells[r : r + 2, c : c + 2] = FREE

    def carve_edge(i, j, ii, jj):
        r, c = 1 + 3 * i, 1 + 3 * j
        rr, cc = 1 + 3 * ii, 1 + 3 * jj
        r0, r1 = min(r, rr), max(r, rr) + 2
        c0, c1 = min(c, cc), max(c, cc) + 2
        cells[r0:r1, c0:c1] = FREE

    visited = np.zeros((ni, nj), dtype=bool)
    start = (int(rng.integers(ni)), int(rng.integers(nj)))
    visited[start] = True
    carve_node(*start)
    stack = [start]
    edges = set()
    while stack:
        i, j = stack[-1]
        nbrs = []
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ii, jj = i + di, j + dj
            if 0 <= ii < ni and 0 <= jj < nj and not visited[ii, jj]:
                nbrs.append((ii, jj))
        if not nbrs:
            stack.pop()
            continue
        nxt = nbrs[int(rng.integers(len(nbrs)))]
        visited[nxt] = True
        carve_node(*nxt)
        carve_edge(i, j, *nxt)
        edges.add(((i, j), nxt))
        edges.add((nxt, (i, j)))
        stack.append(nxt)

    # braid: reopen a minority of dead ends so the maze has a few loops
    degree = np.zeros((ni, nj), dtype=int)
    for (a, b) in edges:
        degree[a] += 1
    degree //= 2
    dead_ends = np.argwhere(degree == 1)
    rng.shuffle(dead_ends)
    n_open = int(len(dead_ends) * braid)
    for i, j in dead_ends[:n_open]:
        options = []
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ii, jj = i + di, j + dj
            if 0 <= ii < ni and 0 <= jj < nj and ((i, j), (ii, jj)) not in edges:
                options.append((ii, jj))
        if options:
            nxt = options[int(rng.integers(len(options)))]
            carve_edge(int(i), int(j), *nxt)
            edges.add(((int(i), int(j)), nxt))
            edges.add((nxt, (int(i), int(j))))
    return cells


_GENERATORS = {"office": _gen_office, "cave": _gen_cave, "maze": _gen_maze}


def generate_env(
    kind: str,
    width: int,
    height: int,
    seed: int,
    cell_size: float = DEFAULT_CELL_SIZE,
    retries: int = 8,
) -> GroundTruth:
    """Generate a sealed, single-component world. Deterministic in all arguments."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown kind {kind!r}, expected one of {sorted(_GENERATORS)}")
    if width < 40 or height < 40:
        raise TooSmallError(f"{width}x{height} below the 40-cell minimum")
    last_err: Exception | None = None
    for attempt in range(retries):
        rng = np.random.Generator(np.random.PCG64((seed, attempt)))
        cells = _GENERATORS[kind](width, height, rng)
        try:
            return _finalize(cells, rng, cell_size, kind)
        except GenerationFailedError as err:
            last_err = err
    raise GenerationFailedError(f"{kind} generation failed after {retries} attempts: {last_err}")


# --- clutter -------------------------------------------------------------------

def _raster_triangle(verts: np.ndarray, h: int, w: int) -> list[tuple[int, int]]:
    """Cells whose center lies inside the triangle (inclusive of edges)."""
    r_lo = max(0, int(np.floor(verts[:, 0].min())))
    r_hi = min(h - 1, int(np.ceil(verts[:, 0].max())))
    c_lo = max(0, int(np.floor(verts[:, 1].min())))
    c_hi = min(w - 1, int(np.ceil(verts[:, 1].max())))
    (ar, ac), (br, bc), (cr, cc) = verts
    out = []
    for r in range(r_lo, r_hi + 1):
        for c in range(c_lo, c_hi + 1):
            pr, pc = r + 0.5, c + 0.5
            d1 = (pr - br) * (ac - bc) - (pc - bc) * (ar - br)
            d2 = (pr - cr) * (bc - cc) - (pc - cc) * (br - cr)
            d3 = (pr - ar) * (cc - ac) - (pc - ac) * (cr - ar)
            neg = (d1 < 0) or (d2 < 0) or (d3 < 0)
            pos = (d1 > 0) or (d2 > 0) or (d3 > 0)
            if not (neg and pos):
                out.append((r, c))
    return out


def add_clutter(gt: GroundTruth, spec: ClutterSpec, retries_per_triangle: int = 80) -> GroundTruth:
    """Rasterize random triangles into OCCUPIED cells.

    A triangle is rejected and resampled if it would disconnect the FREE
    component or cover a start cell. Deterministic in (gt, spec).
    """
    if spec.count == 0:
        return gt
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    cells = gt.cells.copy()
    cells.setflags(write=True)
    radius = (spec.size / 2.0) / gt.cell_size  # cells
    starts = set(gt.starts)
    _, base_components = free_components(cells)
    placed = 0
    for _ in range(spec.count):
        ok = False
        for _try in range(retries_per_triangle):
            free_rc = np.argwhere(cells == FREE)
            center = free_rc[int(rng.integers(len(free_rc)))]
            ang = rng.random(3) * 2 * np.pi
            rad = np.sqrt(rng.random(3)) * radius
            verts = np.stack(
                [center[0] + 0.5 + rad * np.sin(ang), center[1] + 0.5 + rad * np.cos(ang)], axis=1
            )
            covered = _raster_triangle(verts, gt.height, gt.width)
            targets = [(r, c) for r, c in covered if cells[r, c] == FREE]
            if not targets or any((r, c) in starts for r, c in targets):
                continue
            for r, c in targets:
                cells[r, c] = OCCUPIED
            _, n_comp = free_components(cells)
            if n_comp != base_components:
                for r, c in targets:
                    cells[r, c] = FREE
                continue
            ok = True
            placed += 1
            break
        if not ok:
            raise PlacementExhaustedError(
                f"placed {placed}/{spec.count} triangles within the retry budget"
            )
    return GroundTruth(gt.width, gt.height, cells, gt.cell_size, list(gt.starts))
