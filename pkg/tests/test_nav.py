import numpy as np
import pytest

from explorebench.grid import FREE, OCCUPIED, SQRT2
from explorebench.mapping import KnownMap
from explorebench.nav import (
    EmptySourcesError,
    SourceBlockedError,
    UnreachableError,
    clearance_field,
    distance_field,
    extract_path,
    predecessor_tree,
)

import oracles

CS = 0.25


def test_straight_row_distance():
    trav = np.ones((1, 5), dtype=bool)
    field = distance_field(trav, [(0, 0)], CS)
    assert field.distances[0, 4] == pytest.approx(1.0, abs=0)


def test_diagonal_step_distance():
    trav = np.ones((3, 3), dtype=bool)
    field = distance_field(trav, [(1, 1)], CS)
    expect = 0.25 * SQRT2
    for corner in [(0, 0), (0, 2), (2, 0), (2, 2)]:
        assert field.distances[corner] == expect


def test_corner_rule_blocks_pinched_diagonal():
    trav = np.array([[True, False], [False, True]])
    field = distance_field(trav, [(0, 0)], CS)
    assert np.isinf(field.distances[1, 1])
    trav = np.array([[True, True], [False, True]])
    field = distance_field(trav, [(0, 0)], CS)
    assert field.distances[1, 1] == 0.25 * SQRT2


def test_source_errors():
    trav = np.ones((3, 3), dtype=bool)
    with pytest.raises(EmptySourcesError):
        distance_field(trav, [], CS)
    trav[1, 1] = False
    with pytest.raises(SourceBlockedError):
        distance_field(trav, [(1, 1)], CS)


@pytest.mark.parametrize("seed", range(25))
def test_distance_field_matches_relaxation_oracle(seed):
    rng = np.random.default_rng(seed)
    trav = rng.random((20, 20)) > 0.30
    free_rc = np.argwhere(trav)
    src = tuple(map(int, free_rc[rng.integers(len(free_rc))]))
    field = distance_field(trav, [src], CS)
    oracle = oracles.relaxation_distances(trav, [src], CS)
    assert np.array_equal(field.distances, oracle)  # exact, including inf


def test_multi_source_matches_oracle():
    rng = np.random.default_rng(7)
    trav = rng.random((15, 15)) > 0.25
    free_rc = np.argwhere(trav)
    picks = rng.choice(len(free_rc), size=4, replace=False)
    sources = [tuple(map(int, free_rc[i])) for i in picks]
    field = distance_field(trav, sources, CS)
    oracle = oracles.relaxation_distances(trav, sources, CS)
    assert np.array_equal(field.distances, oracle)


def _room_map(n: int) -> KnownMap:
    cells = np.full((n, n), FREE, dtype=np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    return KnownMap(n, n, cells, CS)


def test_clearance_adjacent_wall():
    kmap = _room_map(7)
    clr = clearance_field(kmap)
    assert clr.distances[1, 3] == 0.25  # one axis step onto the wall ring
    assert clr.distances[3, 3] == 0.75  # center of the 5x5 free room


def test_clearance_matches_relaxation_oracle():
    rng = np.random.default_rng(3)
    cells = np.where(rng.random((18, 18)) < 0.2, OCCUPIED, FREE).astype(np.uint8)
    kmap = KnownMap(18, 18, cells, CS)
    clr = clearance_field(kmap)
    trav = np.ones((18, 18), dtype=bool)
    sources = [tuple(map(int, rc)) for rc in np.argwhere(cells != FREE)]
    oracle = oracles.relaxation_distances(trav, sources, CS)
    assert np.array_equal(clr.distances, oracle)


def test_clearance_mirror_symmetry():
    rng = np.random.default_rng(9)
    cells = np.where(rng.random((12, 16)) < 0.25, OCCUPIED, FREE).astype(np.uint8)
    a = clearance_field(KnownMap(16, 12, cells, CS)).distances
    b = clearance_field(KnownMap(16, 12, cells[:, ::-1].copy(), CS)).distances
    assert np.array_equal(a, b[:, ::-1])


def test_extract_path_identity():
    trav = np.ones((5, 5), dtype=bool)
    field = distance_field(trav, [(2, 2)], CS)
    kmap = _room_map(5)
    clr = clearance_field(kmap)
    path = extract_path(field, (2, 2), clr, trav)
    assert path.cells == [(2, 2)]
    assert path.length == 0.0


def test_extract_path_prefers_corridor_center():
    # 3-wide corridor: all shortest paths from one end to the other include
    # the center straight line, which maximizes the minimum wall clearance
    cells = np.full((5, 12), OCCUPIED, dtype=np.uint8)
    cells[1:4, 1:11] = FREE
    kmap = KnownMap(12, 5, cells, CS)
    trav = cells == FREE
    field = distance_field(trav, [(2, 1)], CS)
    clr = clearance_field(kmap)
    path = extract_path(field, (2, 10), clr, trav)
    assert path.length == field.distances[2, 10]
    assert all(r == 2 for r, _ in path.cells)
    # oracle: enumerate every shortest path, compare min-clearance
    best = _max_min_clearance(trav, field.distances, clr.distances, (2, 1), (2, 10))
    got = min(clr.distances[r, c] for r, c in path.cells)
    assert got == best


def _max_min_clearance(trav, dist, clr, src, goal):
    h, w = trav.shape
    step = {True: CS * SQRT2, False: CS}
    best = [-np.inf]

    def walk(cell, acc):
        if cell == src:
            best[0] = max(best[0], acc)
            return
        r, c = cell
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                rr, cc = r + dr, c + dc
                if not (0 <= rr < h and 0 <= cc < w) or not trav[rr, cc]:
                    continue
                if dr != 0 and dc != 0 and not trav[rr, c] and not trav[r, cc]:
                    continue
                if abs(dist[rr, cc] + step[dr != 0 and dc != 0] - dist[r, c]) <= 1e-9:
                    walk((rr, cc), min(acc, clr[rr, cc]))

    walk(goal, clr[goal])
    return best[0]


@pytest.mark.parametrize("seed", range(8))
def test_extract_path_valid_and_length_matches(seed):
    rng = np.random.default_rng(seed)
    cells = np.where(rng.random((16, 16)) < 0.25, OCCUPIED, FREE).astype(np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    trav = cells == FREE
    free_rc = np.argwhere(trav)
    src = tuple(map(int, free_rc[rng.integers(len(free_rc))]))
    kmap = KnownMap(16, 16, cells, CS)
    field = distance_field(trav, [src], CS)
    clr = clearance_field(kmap)
    finite = [tuple(map(int, rc)) for rc in free_rc if np.isfinite(field.distances[tuple(rc)])]
    for goal in finite[:: max(1, len(finite) // 10)]:
        path = extract_path(field, goal, clr, trav)
        assert path.length == field.distances[goal]
        total = 0.0
        for a, b in zip(path.cells, path.cells[1:]):
            dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
            assert max(dr, dc) == 1 and trav[b]
            if dr and dc:
                assert trav[a[0], b[1]] or trav[b[0], a[1]]
            total += CS * SQRT2 if dr and dc else CS
        assert total == pytest.approx(path.length, abs=1e-9)


def test_extract_path_unreachable():
    trav = np.array([[True, False, True]])
    field = distance_field(trav, [(0, 0)], CS)
    kmap = KnownMap(3, 1, np.where(trav, FREE, OCCUPIED).astype(np.uint8), CS)
    with pytest.raises(UnreachableError):
        extract_path(field, (0, 2), clearance_field(kmap), trav)


def test_predecessor_tree_reproduces_extract_path():
    rng = np.random.default_rng(11)
    cells = np.where(rng.random((14, 14)) < 0.2, OCCUPIED, FREE).astype(np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    trav = cells == FREE
    free_rc = np.argwhere(trav)
    src = tuple(map(int, free_rc[0]))
    kmap = KnownMap(14, 14, cells, CS)
    field = distance_field(trav, [src], CS)
    clr = clearance_field(kmap)
    pred = predecessor_tree(field, clr, trav)
    w = 14
    for rc in free_rc[::3]:
        goal = tuple(map(int, rc))
        if not np.isfinite(field.distances[goal]):
            continue
        path = extract_path(field, goal, clr, trav)
        chain = [goal]
        node = goal[0] * w + goal[1]
        while pred[node] >= 0:
            node = int(pred[node])
            chain.append((node // w, node % w))
        assert chain[::-1] == path.cells
