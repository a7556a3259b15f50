import numpy as np
import pytest

from explorebench.grid import FREE, OCCUPIED, UNKNOWN
from explorebench.mapping import (
    TERMINAL_HIT,
    TERMINAL_MAX_RANGE,
    InconsistentScanError,
    KnownMap,
    OriginBlockedError,
    cast_scan,
    integrate_scan,
)
from explorebench.world import GroundTruth

import oracles


def make_world(cells: np.ndarray, starts=None) -> GroundTruth:
    h, w = cells.shape
    return GroundTruth(w, h, cells.astype(np.uint8), 0.25, starts or [])


def open_world(n: int) -> GroundTruth:
    cells = np.full((n, n), FREE, dtype=np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    return make_world(cells)


def test_open_space_all_rays_max_range():
    gt = open_world(60)
    scan = cast_scan(gt, (30, 30))
    assert scan.ray_count == 720
    assert (scan.terminals == TERMINAL_MAX_RANGE).all()
    assert np.allclose(scan.ranges, 4.5)


def test_due_east_wall_two_cells():
    gt = open_world(40)
    cells = gt.cells.copy()
    cells[20, 22] = OCCUPIED
    gt = make_world(cells)
    scan = cast_scan(gt, (20, 20))
    assert scan.terminals[0] == TERMINAL_HIT
    assert scan.ranges[0] == pytest.approx(0.50, abs=1e-12)


def test_adjacent_wall_reads_one_cell():
    gt = open_world(40)
    cells = gt.cells.copy()
    cells[20, 21] = OCCUPIED
    gt = make_world(cells)
    scan = cast_scan(gt, (20, 20))
    assert scan.ranges[0] == pytest.approx(0.25, abs=1e-12)
    assert (scan.ranges > 0).all()


def test_origin_blocked():
    gt = open_world(20)
    with pytest.raises(OriginBlockedError):
        cast_scan(gt, (0, 0))


def test_ranges_match_fine_ray_march_oracle():
    rng = np.random.default_rng(42)
    cells = (rng.random((40, 40)) < 0.12).astype(np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    origin = (20, 20)
    cells[origin] = FREE
    gt = make_world(cells)
    scan = cast_scan(gt, origin)
    ranges_cells = scan.ranges / gt.cell_size
    oracle_ranges, oracle_hit, graze = oracles.ray_march(cells, origin, 720, 4.5 / 0.25)
    checked = 0
    for k in range(720):
        if graze[k]:
            continue  # near-corner passes legitimately differ
        assert abs(ranges_cells[k] - oracle_ranges[k]) <= 1.0, f"ray {k}"
        checked += 1
    assert checked > 600  # the skip list must stay a small minority


def test_integrate_due_east_ray_anatomy():
    gt = open_world(40)
    cells = gt.cells.copy()
    cells[20, 22] = OCCUPIED
    gt = make_world(cells)
    kmap = KnownMap.empty(gt)
    scan = cast_scan(gt, (20, 20), ray_count=1)
    delta = integrate_scan(kmap, scan, gt)
    states = {(int(r), int(c)): int(s) for (r, c), s in zip(delta.cells, delta.states)}
    assert states == {(20, 20): FREE, (20, 21): FREE, (20, 22): OCCUPIED}


def test_integrate_idempotent():
    gt = open_world(30)
    kmap = KnownMap.empty(gt)
    scan = cast_scan(gt, (15, 15))
    first = integrate_scan(kmap, scan, gt)
    assert len(first) > 0
    v = kmap.version
    second = integrate_scan(kmap, scan, gt)
    assert len(second) == 0
    assert kmap.version == v


def test_inconsistent_scan_fails_loudly():
    gt = open_world(30)
    kmap = KnownMap.empty(gt)
    scan = cast_scan(gt, (15, 15))
    blocked = gt.cells.copy()
    blocked[15, 15] = OCCUPIED
    with pytest.raises(InconsistentScanError):
        integrate_scan(kmap, scan, make_world(blocked))


@pytest.mark.parametrize("seed", range(6))
def test_conservativeness_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    cells = (rng.random((35, 35)) < 0.2).astype(np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    gt = make_world(cells)
    free_rc = np.argwhere(cells == FREE)
    kmap = KnownMap.empty(gt)
    unknown_before = int((kmap.cells == UNKNOWN).sum())
    for i in rng.choice(len(free_rc), size=8, replace=False):
        origin = tuple(map(int, free_rc[i]))
        scan = cast_scan(gt, origin)
        integrate_scan(kmap, scan, gt)
        unknown_now = int((kmap.cells == UNKNOWN).sum())
        assert unknown_now <= unknown_before
        unknown_before = unknown_now
    # map state never contradicts the world
    assert not ((kmap.cells == FREE) & (gt.cells != FREE)).any()
    assert not ((kmap.cells == OCCUPIED) & (gt.cells != OCCUPIED)).any()


def test_known_map_serializes_with_question_marks():
    gt = open_world(6)
    kmap = KnownMap.empty(gt)
    scan = cast_scan(gt, (3, 3), ray_count=1)
    integrate_scan(kmap, scan, gt)
    from explorebench.grid import grid_to_text

    text = grid_to_text(kmap.cells)
    assert set(text) <= {"#", ".", "?", "\n"}
    assert "?" in text and "." in text
