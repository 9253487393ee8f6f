"""Lossy-channel simulation as JPEG recompression through the in-repo codec."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidQuality
from .jpeg import CoeffImage, compress, decompress, estimate_quality, ijg_quant_table, round_half_away


@dataclass(frozen=True)
class ChannelModel:
    """Recompression channel.

    ``q_channel=None`` means the channel quality is unknown and the cover's
    own quality factor is used; ``lossless=True`` bypasses recompression.
    """

    q_channel: int | None = None
    lossless: bool = False

    def __post_init__(self):
        if self.q_channel is not None:
            ijg_quant_table(self.q_channel)

    def quality_for(self, cover: CoeffImage) -> int:
        if self.q_channel is not None:
            return self.q_channel
        return cover_quality(cover)

    def apply(self, img: CoeffImage, cover: CoeffImage | None = None) -> CoeffImage:
        if self.lossless:
            return img
        return recompress(img, self.quality_for(cover if cover is not None else img))


def cover_quality(img: CoeffImage) -> int:
    qf = img.quality if img.quality is not None else estimate_quality(img.table)
    if qf is None:
        raise InvalidQuality("cover table is not an IJG table; pass an explicit channel quality")
    return qf


def recompress(img: CoeffImage, q: int) -> CoeffImage:
    return compress(decompress(img), q)


@dataclass(frozen=True, eq=False)
class CoeffDiff:
    count: int
    positions: np.ndarray  # (count, 2) plane coordinates

    def __int__(self):
        return self.count


def coefficient_diff(a: CoeffImage, b: CoeffImage) -> CoeffDiff:
    """Positions where quantized coefficients differ.

    With different tables, ``a`` is first mapped onto ``b``'s grid as
    round(a * qa / qb).
    """
    if a.coeffs.shape != b.coeffs.shape or (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch("images must have identical dimensions")
    if a.table == b.table:
        mapped = a.coeffs
    else:
        reps = (a.block_rows, a.block_cols)
        qa = np.tile(a.table.array, reps)
        qb = np.tile(b.table.array, reps)
        mapped = round_half_away(a.coeffs * qa / qb).astype(np.int64)
    pos = np.argwhere(mapped != b.coeffs)
    return CoeffDiff(len(pos), pos)


def convergence_trace(img: CoeffImage, q: int, iterations: int = 5) -> list[int]:
    """Coefficient changes introduced by each of ``iterations`` recompressions."""
    counts = []
    cur = img
    for _ in range(iterations):
        nxt = recompress(cur, q)
        counts.append(coefficient_diff(cur, nxt).count)
        cur = nxt
    return counts


def diff_histogram(images, q: int, bins) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of self-recompression coefficient changes over an image set."""
    counts = [coefficient_diff(img, recompress(img, q)).count for img in images]
    return np.histogram(counts, bins=bins)
