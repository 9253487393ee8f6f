import itertools
from types import SimpleNamespace

import numpy as np
import pytest

from stegarmor.errors import CapacityExceeded, LengthMismatch
from stegarmor.stc import (
    StcParams,
    parity_check_matrix,
    run_widths,
    stc_embed,
    stc_embed_with_cost,
    stc_extract,
    submatrix,
    ternary_embed,
)


def all_flip_patterns(n):
    """(2^n, n) array of every flip pattern."""
    return ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def brute_force_min(cover, costs, message, params):
    H = parity_check_matrix(len(cover), len(message), params)
    flips = all_flip_patterns(len(cover))
    stego = flips ^ cover
    ok = np.all((stego @ H.T) % 2 == message, axis=1)
    return (flips[ok] @ costs).min() if ok.any() else np.inf


def random_instance(rng, n_max=20):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, n + 1))
    cover = rng.integers(0, 2, n, dtype=np.uint8)
    costs = rng.exponential(1.0, n)
    message = rng.integers(0, 2, m, dtype=np.uint8)
    return cover, costs, message


def test_viterbi_matches_exhaustive_search():
    rng = np.random.default_rng(2024)
    for i in range(200):
        cover, costs, message = random_instance(rng)
        params = StcParams(h=2 + i % 2, seed=int(rng.integers(0, 1000)))
        stego, total = stc_embed_with_cost(cover, costs, message, params)
        assert np.array_equal(stc_extract(stego, len(message), params), message)
        assert total == pytest.approx(costs[stego != cover].sum(), abs=1e-9)
        assert abs(total - brute_force_min(cover, costs, message, params)) <= 1e-9


def test_extract_agrees_with_dense_matrix():
    rng = np.random.default_rng(1)
    for n, m, h in [(50, 7, 4), (100, 33, 10), (64, 64, 3), (37, 5, 7)]:
        params = StcParams(h, seed=3)
        y = rng.integers(0, 2, n, dtype=np.uint8)
        H = parity_check_matrix(n, m, params)
        assert np.array_equal(stc_extract(y, m, params), (H @ y) % 2)


def test_syndrome_law_default_height():
    rng = np.random.default_rng(5)
    for n, m in [(1000, 100), (5000, 2500), (997, 331), (300, 300)]:
        cover = rng.integers(0, 2, n, dtype=np.uint8)
        message = rng.integers(0, 2, m, dtype=np.uint8)
        stego = stc_embed(cover, rng.random(n), message)
        assert np.array_equal(stc_extract(stego, m), message)


def test_submatrix_columns_have_end_bits():
    for h in (2, 5, 10):
        cols = submatrix(StcParams(h, seed=11), 40)
        assert np.all(cols & 1) and np.all(cols >> (h - 1) & 1)
        assert np.all(cols < (1 << h))


def test_run_widths_cover_all_columns():
    for n, m in [(10, 3), (100, 100), (1000, 7), (31, 30)]:
        w = run_widths(n, m)
        assert w.sum() == n and len(w) == m and w.max() - w.min() <= 1


def test_determinism():
    rng = np.random.default_rng(0)
    cover = rng.integers(0, 2, 500, dtype=np.uint8)
    costs = rng.random(500)
    message = rng.integers(0, 2, 120, dtype=np.uint8)
    params = StcParams(8, seed=4)
    assert np.array_equal(stc_embed(cover, costs, message, params),
                          stc_embed(cover, costs, message, params))


def test_cost_scaling_keeps_flip_set():
    rng = np.random.default_rng(8)
    for _ in range(10):
        cover, costs, message = random_instance(rng, 300)
        a = stc_embed(cover, costs, message, StcParams(6))
        b = stc_embed(cover, costs * 37.5, message, StcParams(6))
        assert np.array_equal(a, b)


def test_one_flip_changes_at_most_h_syndrome_bits():
    rng = np.random.default_rng(3)
    params = StcParams(5, seed=1)
    y = rng.integers(0, 2, 200, dtype=np.uint8)
    base = stc_extract(y, 60, params)
    for i in range(200):
        z = y.copy()
        z[i] ^= 1
        assert 1 <= np.sum(stc_extract(z, 60, params) != base) <= params.h


def test_empty_message():
    cover = np.array([1, 0, 1], dtype=np.uint8)
    stego, total = stc_embed_with_cost(cover, np.ones(3), np.zeros(0, dtype=np.uint8))
    assert np.array_equal(stego, cover) and total == 0
    assert stc_extract(cover, 0).size == 0


def test_errors():
    with pytest.raises(CapacityExceeded):
        stc_embed([0, 1], [1.0, 1.0], [1, 1, 1])
    with pytest.raises(LengthMismatch):
        stc_embed([0, 1, 1], [1.0, 1.0], [1])
    with pytest.raises(LengthMismatch):
        stc_extract([0, 1], 3)
    with pytest.raises(ValueError):
        StcParams(h=1)


def _gauss_solution(H, target):
    """Some solution of H y = target over GF(2) (free variables zero)."""
    A = np.concatenate([H.copy(), target[:, None]], axis=1) % 2
    m, n = H.shape
    pivots, row = [], 0
    for col in range(n):
        hit = np.flatnonzero(A[row:, col]) if row < m else []
        if len(hit) == 0:
            continue
        r = row + hit[0]
        A[[row, r]] = A[[r, row]]
        for other in range(m):
            if other != row and A[other, col]:
                A[other] ^= A[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    y = np.zeros(n, dtype=np.uint8)
    for r, col in enumerate(pivots):
        y[col] = A[r, -1]
    return y


def test_uniform_costs_beat_naive_solver():
    rng = np.random.default_rng(12)
    for _ in range(20):
        n, m = int(rng.integers(40, 200)), int(rng.integers(5, 30))
        cover = rng.integers(0, 2, n, dtype=np.uint8)
        message = rng.integers(0, 2, m, dtype=np.uint8)
        params = StcParams(7, seed=2)
        H = parity_check_matrix(n, m, params)
        naive = _gauss_solution(H, (message + H @ cover) % 2)  # flip pattern
        assert np.array_equal((H @ (cover ^ naive)) % 2, message)
        stego = stc_embed(cover, np.ones(n), message, params)
        assert np.sum(stego != cover) <= naive.sum()


def test_ternary_matches_exhaustive_moves():
    rng = np.random.default_rng(77)
    for i in range(60):
        n = int(rng.integers(2, 10))
        m = int(rng.integers(1, n + 1))
        elems = SimpleNamespace(
            cover_bit=rng.integers(0, 2, n, dtype=np.uint8),
            xi_plus=rng.exponential(1.0, n),
            xi_minus=rng.exponential(1.0, n),
        )
        message = rng.integers(0, 2, m, dtype=np.uint8)
        params = StcParams(2 + i % 2, seed=i)
        res = ternary_embed(elems, message, params)
        assert np.array_equal(stc_extract(res.stego_bits, m, params), message)
        moved = res.directions != 0
        assert np.array_equal(moved, res.stego_bits != elems.cover_bit)
        incurred = np.where(res.directions > 0, elems.xi_plus, 0).sum() + \
            np.where(res.directions < 0, elems.xi_minus, 0).sum()
        assert incurred == pytest.approx(res.cost, abs=1e-9)

        H = parity_check_matrix(n, m, params)
        best = np.inf
        for moves in itertools.product((0, 1, -1), repeat=n):
            mv = np.array(moves)
            stego = elems.cover_bit ^ (mv != 0)
            if np.array_equal((H @ stego) % 2, message):
                cost = elems.xi_plus[mv > 0].sum() + elems.xi_minus[mv < 0].sum()
                best = min(best, cost)
        assert abs(res.cost - best) <= 1e-9


def test_ternary_direction_rule():
    elems = SimpleNamespace(
        cover_bit=np.array([0, 0, 0], dtype=np.uint8),
        xi_plus=np.array([1.0, 5.0, 2.0]),
        xi_minus=np.array([5.0, 1.0, 2.0]),
    )
    # with n = m the solution is unique; pick the syndrome of flipping everything
    H = parity_check_matrix(3, 3, StcParams(2))
    message = (H @ np.ones(3, dtype=np.uint8)) % 2
    res = ternary_embed(elems, message, StcParams(2))
    assert res.directions.tolist() == [1, -1, 1]
    assert res.cost == pytest.approx(4.0)
