"""Syndrome-trellis codes: minimum-cost binary embedding with a Viterbi search.

The parity-check matrix H tiles an h-row submatrix along the diagonal.
Message bit i owns a run of ``widths[i]`` consecutive cover positions
(widths differ by at most one so that they sum to the cover length); the
j-th position of a run uses submatrix column j, shifted down by i rows.
Rows beyond the message length are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import CapacityExceeded, InfeasibleSyndrome, LengthMismatch

WET_COST = 1e13
DEFAULT_HEIGHT = 10


@dataclass(frozen=True)
class StcParams:
    h: int = DEFAULT_HEIGHT
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.h <= 20:
            raise ValueError(f"constraint height must be in 2..20, got {self.h}")


def submatrix(params: StcParams, width: int) -> np.ndarray:
    """``width`` columns as h-bit integers, each with its top and bottom bit set.

    Column j is bit-row r when ``(col >> r) & 1``; bit 0 is the top row.
    """
    rng = np.random.default_rng(params.seed)
    ends = 1 | (1 << (params.h - 1))
    cols = rng.integers(0, 1 << params.h, size=max(width, 1), dtype=np.int64) | ends
    return cols


def run_widths(n: int, m: int) -> np.ndarray:
    i = np.arange(m + 1, dtype=np.int64)
    edges = (i * n) // m
    return np.diff(edges)


def _layout(n: int, m: int, params: StcParams):
    widths = run_widths(n, m)
    cols = submatrix(params, int(widths.max()))
    return widths, cols


@numba.njit(cache=True)
def _viterbi(cover, costs, message, widths, cols, h):
    n = cover.shape[0]
    m = message.shape[0]
    nstates = 1 << h
    words = max(1, nstates >> 6)
    path = np.zeros((n, words), dtype=np.uint64)
    inf = np.inf
    cost = np.full(nstates, inf)
    cost[0] = 0.0
    new = np.empty(nstates)
    idx = 0
    for i in range(m):
        for j in range(widths[i]):
            col = cols[j]
            c = costs[idx]
            x = cover[idx]
            c0 = c if x == 1 else 0.0  # cost of stego bit 0
            c1 = c if x == 0 else 0.0  # cost of stego bit 1
            for s in range(nstates):
                w0 = cost[s] + c0
                w1 = cost[s ^ col] + c1
                if w1 < w0:
                    new[s] = w1
                    path[idx, s >> 6] |= np.uint64(1) << np.uint64(s & 63)
                else:
                    new[s] = w0
            for s in range(nstates):
                cost[s] = new[s]
            idx += 1
        bit = message[i]
        half = nstates >> 1
        for s in range(half):
            cost[s] = cost[2 * s + bit]
        for s in range(half, nstates):
            cost[s] = inf
    best = 0
    for s in range(nstates):
        if cost[s] < cost[best]:
            best = s
    total = cost[best]
    stego = np.empty(n, dtype=np.uint8)
    state = best
    idx = n - 1
    for i in range(m - 1, -1, -1):
        state = (state << 1) | message[i]
        for j in range(widths[i] - 1, -1, -1):
            y = (path[idx, state >> 6] >> np.uint64(state & 63)) & np.uint64(1)
            stego[idx] = np.uint8(y)
            if y:
                state ^= cols[j]
            idx -= 1
    return stego, total, state


@numba.njit(cache=True)
def _syndrome(stego, widths, cols, m):
    out = np.empty(m, dtype=np.uint8)
    state = 0
    idx = 0
    for i in range(m):
        for j in range(widths[i]):
            if stego[idx]:
                state ^= cols[j]
            idx += 1
        out[i] = state & 1
        state >>= 1
    return out


def stc_embed(cover_bits, flip_costs, message_bits, params: StcParams = StcParams()) -> np.ndarray:
    """Stego bits with syndrome ``message_bits`` and minimal total flip cost."""
    stego, _ = stc_embed_with_cost(cover_bits, flip_costs, message_bits, params)
    return stego


def stc_embed_with_cost(cover_bits, flip_costs, message_bits, params: StcParams = StcParams()):
    cover = np.ascontiguousarray(cover_bits, dtype=np.uint8)
    costs = np.ascontiguousarray(flip_costs, dtype=np.float64)
    message = np.ascontiguousarray(message_bits, dtype=np.uint8)
    if costs.shape != cover.shape:
        raise LengthMismatch(f"{costs.size} costs for {cover.size} cover bits")
    if message.size > cover.size:
        raise CapacityExceeded(f"{message.size} message bits exceed {cover.size} cover elements")
    if message.size == 0:
        return cover.copy(), 0.0
    if np.any(costs < 0) or np.any(np.isnan(costs)):
        raise ValueError("flip costs must be nonnegative")
    costs = np.minimum(costs, WET_COST)
    widths, cols = _layout(cover.size, message.size, params)
    stego, total, start = _viterbi(cover, costs, message, widths, cols, params.h)
    if not np.isfinite(total) or start != 0:
        raise InfeasibleSyndrome("no stego sequence reaches the requested syndrome")
    return stego, float(total)


def stc_extract(stego_bits, message_len: int, params: StcParams = StcParams()) -> np.ndarray:
    stego = np.ascontiguousarray(stego_bits, dtype=np.uint8)
    if message_len == 0:
        return np.zeros(0, dtype=np.uint8)
    if message_len < 0 or message_len > stego.size:
        raise LengthMismatch(f"cannot extract {message_len} bits from {stego.size} stego bits")
    widths, cols = _layout(stego.size, message_len, params)
    return _syndrome(stego, widths, cols, message_len)


def parity_check_matrix(n: int, m: int, params: StcParams = StcParams()) -> np.ndarray:
    """Dense H (m x n) for the same layout; for inspection and testing."""
    widths, cols = _layout(n, m, params)
    H = np.zeros((m, n), dtype=np.uint8)
    idx = 0
    for i in range(m):
        for j in range(widths[i]):
            for r in range(params.h):
                if i + r < m and (cols[j] >> r) & 1:
                    H[i + r, idx] = 1
            idx += 1
    return H


@dataclass(frozen=True, eq=False)
class TernaryResult:
    stego_bits: np.ndarray
    directions: np.ndarray  # +1 / -1 on flipped elements, 0 elsewhere
    cost: float


def ternary_embed(elements, message_bits, params: StcParams = StcParams()) -> TernaryResult:
    """Parity embedding where each flip may go up or down at its own cost.

    Both moves flip the interval parity, so the trellis only sees
    min(xi+, xi-) and the cheaper direction is chosen afterwards (tie: up).
    """
    xi_plus = np.asarray(elements.xi_plus, dtype=np.float64)
    xi_minus = np.asarray(elements.xi_minus, dtype=np.float64)
    flip_cost = np.minimum(xi_plus, xi_minus)
    stego, total = stc_embed_with_cost(elements.cover_bit, flip_cost, message_bits, params)
    flipped = stego != np.asarray(elements.cover_bit, dtype=np.uint8)
    up = xi_plus <= xi_minus
    directions = np.where(flipped, np.where(up, 1, -1), 0).astype(np.int8)
    return TernaryResult(stego, directions, total)
