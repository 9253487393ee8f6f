"""Batch robustness sweeps and ablations producing CSV rows.

Everything is seeded: an identical :class:`ExperimentSpec` yields
byte-identical CSV output (wall time is only written when asked for).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .channel import ChannelModel, cover_quality
from .corpus import synthetic_corpus
from .embedder import (
    CoverAnalysis,
    EmbedConfig,
    embed,
    embed_fixed,
    message_length,
)
from .errors import StegError
from .jpeg import CoeffImage, SpatialImage, compress, count_nzac, parse_jpeg
from .domain import DOMAIN_NAMES
from .rs import MAX_T

CSV_VERSION = 1
JPEG_SUFFIXES = {".jpg", ".jpeg", ".jfif"}
IMAGE_SUFFIXES = JPEG_SUFFIXES | {".png", ".pgm", ".bmp", ".tif", ".tiff"}

BENCH_FIELDS = [
    "image_id", "payload", "threshold", "repetition", "q_cover", "q_channel",
    "n_nzac", "n_m", "bpnzac", "e_n", "t", "r_error", "exhausted", "attempts", "status",
]
ABLATE_FIELDS = [
    "image_id", "payload", "mode", "setting", "e_n", "t", "q_cover", "q_channel",
    "n_nzac", "n_m", "bpnzac", "r_error", "feasible", "exhausted", "status",
]


@dataclass
class ExperimentSpec:
    images: list[str] = field(default_factory=list)
    image_dir: str | None = None
    synthetic: int = 0
    synthetic_size: int = 256
    synthetic_seed: int = 0
    q_cover: int = 75
    q_channel: int | None = 75
    payloads: list[float] = field(default_factory=lambda: [0.05, 0.10])
    thresholds: list[float] = field(default_factory=lambda: [1e-4])
    alpha: float = 0.7
    h: int = 10
    message_seed: int = 0
    stc_seed: int = 0
    repetitions: int = 1
    workers: int | None = None

    def __post_init__(self):
        if any(not p > 0 for p in self.payloads):
            raise ValueError("payloads must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# covers

def load_cover(path, q_cover: int = 75) -> CoeffImage:
    """JPEG files are parsed as-is; other images are compressed at ``q_cover``."""
    path = Path(path)
    if path.suffix.lower() in JPEG_SUFFIXES:
        return parse_jpeg(path.read_bytes())
    with Image.open(path) as im:
        return compress(SpatialImage(np.asarray(im.convert("L"))), q_cover)


def cover_sources(spec: ExperimentSpec) -> list[tuple[str, object]]:
    """``(image_id, source)`` pairs; a source is a path or a CoeffImage."""
    sources: list[tuple[str, object]] = []
    for p in spec.images:
        sources.append((Path(p).name, Path(p)))
    if spec.image_dir:
        for p in sorted(Path(spec.image_dir).iterdir()):
            if p.suffix.lower() in IMAGE_SUFFIXES:
                sources.append((p.name, p))
    if spec.synthetic:
        covers = synthetic_corpus(spec.synthetic, spec.synthetic_size, spec.q_cover, spec.synthetic_seed)
        for i, c in enumerate(covers):
            sources.append((f"synth_{spec.synthetic_seed + i:04d}", c))
    if not sources:
        raise ValueError("experiment has no images")
    return sources


def _resolve(source, q_cover) -> CoeffImage:
    return source if isinstance(source, CoeffImage) else load_cover(source, q_cover)


def message_seed(base: int, image_index: int, payload_index: int, repetition: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base, image_index, payload_index, repetition])


def _message(n_m, seed_seq) -> np.ndarray:
    return np.random.default_rng(seed_seq).integers(0, 2, n_m, dtype=np.uint8)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def _workers(spec: ExperimentSpec) -> int:
    if spec.workers:
        return spec.workers
    env = os.environ.get("STEGARMOR_WORKERS")
    return max(1, int(env)) if env else 1


def _map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# --------------------------------------------------------------------------
# bench

def _bench_image(job) -> list[dict]:
    spec, index, image_id, source, timing = job
    rows = []
    try:
        cover = _resolve(source, spec.q_cover)
        analysis = CoverAnalysis(cover, spec.alpha)
        q_cover = cover_quality(cover)
    except (StegError, OSError, ValueError) as exc:
        for p in spec.payloads:
            for thr in spec.thresholds:
                for rep in range(spec.repetitions):
                    rows.append({"image_id": image_id, "payload": p, "threshold": thr,
                                 "repetition": rep, "status": f"error: {exc}"})
        return rows
    nzac = count_nzac(cover)
    channel = ChannelModel(spec.q_channel)
    for pi, p in enumerate(spec.payloads):
        for thr in spec.thresholds:
            for rep in range(spec.repetitions):
                row = {"image_id": image_id, "payload": p, "threshold": thr, "repetition": rep,
                       "q_cover": q_cover, "q_channel": channel.quality_for(cover), "n_nzac": nzac}
                started = time.perf_counter()
                try:
                    n_m = message_length(cover, p)
                    msg = _message(n_m, message_seed(spec.message_seed, index, pi, rep))
                    cfg = EmbedConfig(spec.alpha, thr, spec.h, channel, p, spec.stc_seed)
                    _, recipe, report = embed(cover, msg, cfg, analysis)
                    row.update(
                        n_m=n_m, bpnzac=n_m / nzac, e_n=recipe.e_n, t=recipe.t,
                        r_error=report.error_rate, exhausted=report.exhausted,
                        attempts=len(report.attempts), status="ok",
                    )
                except StegError as exc:
                    row["status"] = f"error: {exc}"
                if timing:
                    row["wall_time"] = time.perf_counter() - started
                rows.append(row)
    return rows


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else float("nan")


def bench_summary(rows: list[dict], spec: ExperimentSpec) -> list[dict]:
    out = []
    for p in spec.payloads:
        for thr in spec.thresholds:
            ok = [r for r in rows if r["payload"] == p and r["threshold"] == thr and r.get("status") == "ok"]
            out.append({
                "image_id": "MEAN", "payload": p, "threshold": thr, "repetition": "",
                "q_cover": "", "q_channel": spec.q_channel if spec.q_channel is not None else "",
                "n_nzac": _mean(r["n_nzac"] for r in ok),
                "n_m": _mean(r["n_m"] for r in ok),
                "bpnzac": _mean(r["bpnzac"] for r in ok),
                "e_n": _mean(r["e_n"] for r in ok),
                "t": _mean(r["t"] for r in ok),
                "r_error": _mean(r["r_error"] for r in ok),
                "exhausted": _mean(float(r["exhausted"]) for r in ok),
                "attempts": _mean(r["attempts"] for r in ok),
                "status": f"summary n={len(ok)}",
            })
    return out


def run_bench(spec: ExperimentSpec, timing: bool = False) -> tuple[list[dict], list[dict]]:
    """Per-image rows plus per-(payload, threshold) averages."""
    sources = cover_sources(spec)
    jobs = [(spec, i, image_id, src, timing) for i, (image_id, src) in enumerate(sources)]
    rows = [r for chunk in _map(_bench_image, jobs, _workers(spec)) for r in chunk]
    order = {image_id: i for i, (image_id, _) in enumerate(sources)}
    rows.sort(key=lambda r: (spec.payloads.index(r["payload"]), spec.thresholds.index(r["threshold"]),
                             order[r["image_id"]], r["repetition"]))
    return rows, bench_summary(rows, spec)


# --------------------------------------------------------------------------
# ablation

ABLATION_MODES = ("domain", "capability")
FIXED_T = 8
FIXED_DOMAIN = 1


def ablation_settings(mode: str) -> list[tuple[str, tuple]]:
    """(label, schedule) pairs: the fixed settings then the adaptive one."""
    if mode == "domain":
        fixed = [(f"{DOMAIN_NAMES[e]}/t{FIXED_T}", ((e, FIXED_T),)) for e in range(1, 7)]
        adaptive = ("AE", tuple((e, FIXED_T) for e in range(1, 7)))
    elif mode == "capability":
        fixed = [(f"{DOMAIN_NAMES[FIXED_DOMAIN]}/t{t}", ((FIXED_DOMAIN, t),)) for t in range(1, MAX_T + 1)]
        adaptive = ("ACC", tuple((FIXED_DOMAIN, t) for t in range(1, MAX_T + 1)))
    else:
        raise ValueError(f"ablation mode must be one of {ABLATION_MODES}, got {mode!r}")
    return fixed + [adaptive]


def _ablate_image(job) -> list[dict]:
    spec, mode, index, image_id, source = job
    settings = ablation_settings(mode)
    threshold = spec.thresholds[0]
    rows = []
    try:
        cover = _resolve(source, spec.q_cover)
        analysis = CoverAnalysis(cover, spec.alpha)
        q_cover = cover_quality(cover)
    except (StegError, OSError, ValueError) as exc:
        return [{"image_id": image_id, "payload": p, "mode": mode, "setting": label,
                 "status": f"error: {exc}"} for p in spec.payloads for label, _ in settings]
    nzac = count_nzac(cover)
    channel = ChannelModel(spec.q_channel)
    for pi, p in enumerate(spec.payloads):
        base = {"image_id": image_id, "payload": p, "mode": mode, "q_cover": q_cover,
                "q_channel": channel.quality_for(cover), "n_nzac": nzac}
        try:
            n_m = message_length(cover, p)
        except StegError as exc:
            rows.extend({**base, "setting": label, "status": f"error: {exc}"} for label, _ in settings)
            continue
        msg = _message(n_m, message_seed(spec.message_seed, index, pi, 0))
        cfg = EmbedConfig(spec.alpha, threshold, spec.h, channel, p, spec.stc_seed)
        base.update(n_m=n_m, bpnzac=n_m / nzac)
        for label, schedule in settings:
            row = {**base, "setting": label}
            try:
                if len(schedule) == 1:
                    (e_n, t), = schedule
                    _, _, attempt = embed_fixed(cover, msg, cfg, e_n, t, analysis)
                    row.update(e_n=e_n, t=t, r_error=attempt.error_rate,
                               feasible=attempt.feasible, exhausted="", status="ok")
                else:
                    _, recipe, report = embed(cover, msg, cfg, analysis, schedule)
                    row.update(e_n=recipe.e_n, t=recipe.t, r_error=report.error_rate,
                               feasible=True, exhausted=report.exhausted, status="ok")
            except StegError as exc:
                row["status"] = f"error: {exc}"
            rows.append(row)
    return rows


def ablation_summary(rows: list[dict], spec: ExperimentSpec, mode: str) -> list[dict]:
    out = []
    for p in spec.payloads:
        for label, _ in ablation_settings(mode):
            ok = [r for r in rows if r["payload"] == p and r["setting"] == label and r.get("status") == "ok"]
            out.append({
                "image_id": "MEAN", "payload": p, "mode": mode, "setting": label,
                "e_n": _mean(r["e_n"] for r in ok), "t": _mean(r["t"] for r in ok),
                "q_cover": "", "q_channel": spec.q_channel if spec.q_channel is not None else "",
                "n_nzac": _mean(r["n_nzac"] for r in ok), "n_m": _mean(r["n_m"] for r in ok),
                "bpnzac": _mean(r["bpnzac"] for r in ok),
                "r_error": _mean(r["r_error"] for r in ok),
                "feasible": _mean(float(r["feasible"]) for r in ok),
                "exhausted": "", "status": f"summary n={len(ok)}",
            })
    return out


def run_ablation(spec: ExperimentSpec, mode: str) -> tuple[list[dict], list[dict]]:
    ablation_settings(mode)
    sources = cover_sources(spec)
    jobs = [(spec, mode, i, image_id, src) for i, (image_id, src) in enumerate(sources)]
    rows = [r for chunk in _map(_ablate_image, jobs, _workers(spec)) for r in chunk]
    labels = [label for label, _ in ablation_settings(mode)]
    order = {image_id: i for i, (image_id, _) in enumerate(sources)}
    rows.sort(key=lambda r: (spec.payloads.index(r["payload"]), order[r["image_id"]],
                             labels.index(r["setting"])))
    return rows, ablation_summary(rows, spec, mode)


# --------------------------------------------------------------------------
# CSV

def to_csv(rows: list[dict], fields: list[str], timing: bool = False) -> str:
    """RFC-4180 text; the leading ``csv_version`` column carries CSV_VERSION."""
    fields = list(fields) + (["wall_time"] if timing else [])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(["csv_version"] + fields)
    for row in rows:
        writer.writerow([CSV_VERSION] + [_fmt(row.get(f)) for f in fields])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
