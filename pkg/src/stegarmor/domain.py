"""Embedding domains over the 8x8 block and the canonical cover-element scan.

Domain 1 is the whole block. Domain n >= 2 is the union of the
counter-diagonals holding n..8 coefficients, i.e. positions with
row + col in {n-1, ..., 7}. Within a block, elements are visited in zigzag
order restricted to the domain; blocks are visited in raster order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .costs import DitherInfo
from .errors import InvalidDomainIndex, LengthMismatch
from .jpeg import ZIGZAG, CoeffImage, QuantTable, round_half_away

DOMAIN_NAMES = {1: "E64", 2: "E2-8", 3: "E3-8", 4: "E4-8", 5: "E5-8", 6: "E6-8"}
DOMAIN_SIZES = {1: 64, 2: 35, 3: 33, 4: 30, 5: 26, 6: 21}


@dataclass(frozen=True)
class EmbeddingDomain:
    index: int
    positions: tuple[tuple[int, int], ...]

    @property
    def name(self) -> str:
        return DOMAIN_NAMES[self.index]

    def __len__(self):
        return len(self.positions)


@lru_cache(maxsize=None)
def domain_positions(index: int) -> tuple[tuple[int, int], ...]:
    if isinstance(index, bool) or index not in DOMAIN_NAMES:
        raise InvalidDomainIndex(f"embedding domain index must be in 1..6, got {index!r}")
    scan = [divmod(int(p), 8) for p in ZIGZAG]
    if index == 1:
        return tuple(scan)
    return tuple((r, c) for r, c in scan if index - 1 <= r + c <= 7)


def get_domain(index: int) -> EmbeddingDomain:
    return EmbeddingDomain(index, domain_positions(index))


def _as_domain(domain) -> EmbeddingDomain:
    return domain if isinstance(domain, EmbeddingDomain) else get_domain(domain)


def _plane_indices(block_rows: int, block_cols: int, domain: EmbeddingDomain):
    """Row/column coordinates in the coefficient plane, in scan order."""
    pos = np.array(domain.positions)
    bi, bj = np.divmod(np.arange(block_rows * block_cols), block_cols)
    rows = (8 * bi[:, None] + pos[None, :, 0]).ravel()
    cols = (8 * bj[:, None] + pos[None, :, 1]).ravel()
    return rows, cols


@dataclass(frozen=True, eq=False)
class CoverSequence:
    """Flattened cover elements of one domain; every field is a 1-D array."""

    domain: EmbeddingDomain
    rows: np.ndarray
    cols: np.ndarray
    interval: np.ndarray
    cover_bit: np.ndarray
    xi_plus: np.ndarray
    xi_minus: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray

    def __len__(self):
        return len(self.cover_bit)

    @property
    def block_index(self) -> np.ndarray:
        n = len(self.domain)
        return np.repeat(np.arange(len(self) // n), n)

    @property
    def position(self) -> np.ndarray:
        return (self.rows % 8) * 8 + self.cols % 8

    @property
    def flip_cost(self) -> np.ndarray:
        return np.minimum(self.xi_plus, self.xi_minus)


def build_cover_sequence(cover: CoeffImage, dither: DitherInfo, domain) -> CoverSequence:
    domain = _as_domain(domain)
    if dither.xi_plus is None or dither.xi_minus is None:
        raise ValueError("dither info carries no modifying costs; use costs.compute_costs")
    r, c = _plane_indices(cover.block_rows, cover.block_cols, domain)
    return CoverSequence(
        domain=domain,
        rows=r,
        cols=c,
        interval=dither.interval[r, c],
        cover_bit=dither.cover_bit[r, c].astype(np.uint8),
        xi_plus=dither.xi_plus[r, c],
        xi_minus=dither.xi_minus[r, c],
        d_plus=dither.d_plus[r, c],
        d_minus=dither.d_minus[r, c],
    )


def choose_directions(seq: CoverSequence) -> np.ndarray:
    """+1 where the upward move is no costlier than the downward one, else -1."""
    return np.where(seq.xi_plus <= seq.xi_minus, 1, -1).astype(np.int8)


def apply_stego_sequence(
    cover: CoeffImage, seq: CoverSequence, stego_bits, directions=None
) -> CoeffImage:
    """Re-quantize domain coefficients so their interval parity equals ``stego_bits``.

    Kept elements land on their own interval center k (the stored value for
    any cover whose real coefficients round back to it); flipped elements
    move to k+1 or k-1.
    """
    stego_bits = np.asarray(stego_bits, dtype=np.uint8)
    if stego_bits.shape != seq.cover_bit.shape:
        raise LengthMismatch(f"{stego_bits.size} stego bits for {len(seq)} cover elements")
    if directions is None:
        directions = choose_directions(seq)
    flip = stego_bits != seq.cover_bit
    new_vals = seq.interval + np.where(flip, directions, 0)
    coeffs = cover.coeffs.copy()
    coeffs[seq.rows, seq.cols] = new_vals
    return cover.replace(coeffs=coeffs)


def read_stego_bits(received: CoeffImage, domain, cover_table: QuantTable) -> np.ndarray:
    """Parity of each domain coefficient measured on the embed-time grid."""
    domain = _as_domain(domain)
    r, c = _plane_indices(received.block_rows, received.block_cols, domain)
    recv_q = received.table.array[r % 8, c % 8]
    cover_q = cover_table.array[r % 8, c % 8]
    dequant = received.coeffs[r, c].astype(np.float64) * recv_q
    k = round_half_away(dequant / cover_q).astype(np.int64)
    return (k % 2).astype(np.uint8)
