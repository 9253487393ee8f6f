"""Adaptive robust embedding: escalate RS capability, then the embedding domain.

Each attempt RS-encodes the payload at capability t, embeds it with ternary
STC into the cover elements of domain E_n, pushes the candidate stego
through the simulated channel and measures the message error rate.  The
first attempt whose rate is within the threshold wins; the schedule is
t = 1..12 for E_n = 1, then t = 1..12 for E_n = 2, and so on up to E_n = 6.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, cover_quality
from .costs import CostMaps, DitherInfo, compute_costs
from .domain import build_cover_sequence, get_domain, read_stego_bits, apply_stego_sequence
from .errors import CapacityExceeded, DecodeFailure, ExtractFailure, InvalidPayload, NotFound
from .jpeg import CoeffImage, QuantTable, count_nzac, estimate_quality, ijg_quant_table
from .rs import MAX_T, encoded_length, rs_decode, rs_encode
from .stc import StcParams, stc_extract, ternary_embed

N_DOMAINS = 6
CRC_BITS = 32
SCHEDULE = tuple((e, t) for e in range(1, N_DOMAINS + 1) for t in range(1, MAX_T + 1))


@dataclass(frozen=True)
class EmbedConfig:
    alpha: float = 0.7
    threshold: float = 1e-4
    h: int = 10
    channel: ChannelModel = field(default_factory=ChannelModel)
    payload: float | None = None
    stc_seed: int = 0
    crc: bool = False


@dataclass(frozen=True)
class StegoRecipe:
    e_n: int
    t: int
    n_m: int
    h: int
    stc_seed: int
    cover_table: QuantTable
    crc_mode: str = "none"

    @property
    def embedded_len(self) -> int:
        return self.n_m + (CRC_BITS if self.crc_mode == "crc32" else 0)

    @property
    def params(self) -> StcParams:
        return StcParams(self.h, self.stc_seed)

    def to_dict(self) -> dict:
        qf = estimate_quality(self.cover_table)
        out = {
            "e_n": self.e_n,
            "t": self.t,
            "n_m": self.n_m,
            "h": self.h,
            "stc_seed": self.stc_seed,
            "cover_qf": qf,
            "crc_mode": self.crc_mode,
        }
        if qf is None:
            out["cover_table"] = list(self.cover_table.steps)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "StegoRecipe":
        if d.get("cover_table") is not None:
            table = QuantTable(tuple(d["cover_table"]))
        else:
            table = ijg_quant_table(int(d["cover_qf"]))
        return cls(
            e_n=int(d["e_n"]),
            t=int(d["t"]),
            n_m=int(d["n_m"]),
            h=int(d["h"]),
            stc_seed=int(d["stc_seed"]),
            cover_table=table,
            crc_mode=d.get("crc_mode", "none"),
        )

    @classmethod
    def from_json(cls, text: str) -> "StegoRecipe":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Attempt:
    e_n: int
    t: int
    error_rate: float
    feasible: bool = True
    decoded: bool = True


@dataclass(frozen=True)
class RobustnessReport:
    attempts: tuple[Attempt, ...]
    final: StegoRecipe
    exhausted: bool

    @property
    def error_rate(self) -> float:
        for a in self.attempts:
            if (a.e_n, a.t) == (self.final.e_n, self.final.t):
                return a.error_rate
        raise LookupError("final recipe not among attempts")

    def to_dict(self) -> dict:
        return {
            "final": self.final.to_dict(),
            "exhausted": self.exhausted,
            "error_rate": self.error_rate,
            "attempts": [
                {"e_n": a.e_n, "t": a.t, "error_rate": a.error_rate,
                 "feasible": a.feasible, "decoded": a.decoded}
                for a in self.attempts
            ],
        }


# --------------------------------------------------------------------------
# message helpers

def message_length(cover: CoeffImage, payload: float) -> int:
    """n_m = round(payload * number of nonzero AC coefficients)."""
    if not payload > 0:
        raise InvalidPayload(f"payload must be positive, got {payload}")
    n_m = int(round(payload * count_nzac(cover)))
    if n_m < 1:
        raise InvalidPayload(f"payload {payload} yields an empty message on this cover")
    return n_m


def random_message(n_bits: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, n_bits, dtype=np.uint8)


def crc_bits(message) -> np.ndarray:
    message = np.asarray(message, dtype=np.uint8)
    crc = zlib.crc32(np.packbits(message).tobytes() + len(message).to_bytes(8, "big"))
    return ((crc >> np.arange(CRC_BITS - 1, -1, -1)) & 1).astype(np.uint8)


def _with_crc(message: np.ndarray) -> np.ndarray:
    return np.concatenate([crc_bits(message), message])


def _strip_crc(bits: np.ndarray) -> tuple[np.ndarray, bool]:
    prefix, body = bits[:CRC_BITS], bits[CRC_BITS:]
    return body, bool(np.array_equal(prefix, crc_bits(body)))


# --------------------------------------------------------------------------
# extraction

def extract_embedded(stego: CoeffImage, recipe: StegoRecipe) -> np.ndarray:
    """RS-decoded embedded bits (CRC prefix included).

    Raises DecodeFailure carrying best-effort bits when RS cannot correct.
    """
    domain = get_domain(recipe.e_n)
    stego_bits = read_stego_bits(stego, domain, recipe.cover_table)
    code_len = encoded_length(recipe.embedded_len, recipe.t)
    if code_len > stego_bits.size:
        raise DecodeFailure(
            f"recipe needs {code_len} code bits but domain E{recipe.e_n} holds {stego_bits.size}",
            bits=np.zeros(recipe.embedded_len, dtype=np.uint8),
        )
    code = stc_extract(stego_bits, code_len, recipe.params)
    return rs_decode(code, recipe.t, recipe.embedded_len)


def extract(stego: CoeffImage, recipe: StegoRecipe) -> np.ndarray:
    """Recover the message; ExtractFailure carries best-effort bits."""
    try:
        bits = extract_embedded(stego, recipe)
    except DecodeFailure as exc:
        best = exc.bits
        if recipe.crc_mode == "crc32":
            best = best[CRC_BITS:]
        raise ExtractFailure(str(exc), bits=best) from exc
    if recipe.crc_mode == "crc32":
        body, ok = _strip_crc(bits)
        if not ok:
            raise ExtractFailure("CRC mismatch after RS decoding", bits=body)
        return body
    return bits


def auto_extract(stego: CoeffImage, n_m: int, h: int, seed: int, cover_table: QuantTable):
    """Search the embed schedule for the (E_n, t) whose decode passes the CRC.

    Only works for messages embedded with a CRC prefix.
    """
    for e_n, t in SCHEDULE:
        recipe = StegoRecipe(e_n, t, n_m, h, seed, cover_table, "crc32")
        try:
            bits = extract(stego, recipe)
        except ExtractFailure:
            continue
        return bits, e_n, t
    raise NotFound("no (E_n, t) pair produced a message with a valid CRC")


# --------------------------------------------------------------------------
# embedding

class CoverAnalysis:
    """Costs and per-domain cover sequences of one cover, computed once.

    The cost maps are held fixed across all attempts of the adaptive loop.
    """

    def __init__(self, cover: CoeffImage, alpha: float = 0.7,
                 costs: tuple[CostMaps, DitherInfo] | None = None):
        self.cover = cover
        self.costs, self.dither = costs if costs is not None else compute_costs(cover, alpha)
        self._sequences = {}

    def sequence(self, e_n: int):
        if e_n not in self._sequences:
            self._sequences[e_n] = build_cover_sequence(self.cover, self.dither, e_n)
        return self._sequences[e_n]

    def capacity(self, e_n: int) -> int:
        return len(get_domain(e_n)) * self.cover.n_blocks

    def embed_at(self, payload_bits: np.ndarray, e_n: int, t: int, params: StcParams) -> CoeffImage | None:
        """Candidate stego for one (E_n, t); None if the code does not fit."""
        code = rs_encode(payload_bits, t)
        seq = self.sequence(e_n)
        if code.size > len(seq):
            return None
        res = ternary_embed(seq, code, params)
        return apply_stego_sequence(self.cover, seq, res.stego_bits, res.directions)


def measure(stego: CoeffImage, recipe: StegoRecipe, payload_bits: np.ndarray,
            channel: ChannelModel, cover: CoeffImage) -> tuple[float, bool]:
    """Error rate of the RS-decoded payload after the channel, and decode success."""
    received = channel.apply(stego, cover)
    try:
        bits = extract_embedded(received, recipe)
        decoded = True
    except DecodeFailure as exc:
        bits = exc.bits
        decoded = False
    return float(np.mean(bits != payload_bits)), decoded


def _prepare(cover: CoeffImage, message, cfg: EmbedConfig):
    message = np.asarray(message, dtype=np.uint8).ravel()
    if message.size == 0:
        raise InvalidPayload("message is empty")
    if np.any(message > 1):
        raise InvalidPayload("message must be a bit sequence")
    payload_bits = _with_crc(message) if cfg.crc else message
    if encoded_length(payload_bits.size, 1) > 64 * cover.n_blocks:
        raise CapacityExceeded(
            f"{payload_bits.size}-bit message cannot fit the {64 * cover.n_blocks}-element cover"
        )
    return message, payload_bits


def _recipe(cover, message, cfg, e_n, t) -> StegoRecipe:
    return StegoRecipe(e_n, t, message.size, cfg.h, cfg.stc_seed, cover.table,
                       "crc32" if cfg.crc else "none")


def embed(cover: CoeffImage, message, cfg: EmbedConfig = EmbedConfig(),
          analysis: CoverAnalysis | None = None, schedule=SCHEDULE):
    """Run the adaptive loop; returns ``(stego, recipe, report)``.

    If no attempt meets the threshold, the attempt with the lowest error
    rate is returned and ``report.exhausted`` is set.  ``schedule`` may be
    narrowed (e.g. a single domain) for ablation studies.
    """
    message, payload_bits = _prepare(cover, message, cfg)
    if analysis is None:
        analysis = CoverAnalysis(cover, cfg.alpha)
    params = StcParams(cfg.h, cfg.stc_seed)
    attempts = []
    best = None
    for e_n, t in schedule:
        recipe = _recipe(cover, message, cfg, e_n, t)
        stego = analysis.embed_at(payload_bits, e_n, t, params)
        if stego is None:
            attempts.append(Attempt(e_n, t, 1.0, feasible=False, decoded=False))
            continue
        rate, decoded = measure(stego, recipe, payload_bits, cfg.channel, cover)
        attempts.append(Attempt(e_n, t, rate, True, decoded))
        if best is None or rate < best[0]:
            best = (rate, stego, recipe)
        if rate <= cfg.threshold:
            return stego, recipe, RobustnessReport(tuple(attempts), recipe, False)
    if best is None:
        raise CapacityExceeded("the encoded message fits no domain in the schedule")
    rate, stego, recipe = best
    return stego, recipe, RobustnessReport(tuple(attempts), recipe, True)


def embed_fixed(cover: CoeffImage, message, cfg: EmbedConfig, e_n: int, t: int,
                analysis: CoverAnalysis | None = None):
    """Single attempt at a fixed (E_n, t); returns ``(stego, recipe, attempt)``.

    ``stego`` is None when the encoded message does not fit the domain.
    """
    message, payload_bits = _prepare(cover, message, cfg)
    if analysis is None:
        analysis = CoverAnalysis(cover, cfg.alpha)
    recipe = _recipe(cover, message, cfg, e_n, t)
    stego = analysis.embed_at(payload_bits, e_n, t, StcParams(cfg.h, cfg.stc_seed))
    if stego is None:
        return None, recipe, Attempt(e_n, t, 1.0, feasible=False, decoded=False)
    rate, decoded = measure(stego, recipe, payload_bits, cfg.channel, cover)
    return stego, recipe, Attempt(e_n, t, rate, True, decoded)


def channel_quality(cfg: EmbedConfig, cover: CoeffImage) -> int | None:
    if cfg.channel.lossless:
        return None
    return cfg.channel.quality_for(cover)


__all__ = [
    "Attempt", "CoverAnalysis", "EmbedConfig", "RobustnessReport", "SCHEDULE", "StegoRecipe",
    "auto_extract", "channel_quality", "cover_quality", "crc_bits", "embed", "embed_fixed",
    "extract", "extract_embedded", "measure", "message_length", "random_message",
]
