"""Command-line entry point: ``stegarmor {embed,extract,simulate,bench,ablate,corpus}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .channel import ChannelModel, cover_quality, recompress
from .costs import dump_cost_maps
from .corpus import write_corpus
from .embedder import (
    CoverAnalysis,
    EmbedConfig,
    StegoRecipe,
    auto_extract,
    embed,
    extract,
    message_length,
    random_message,
)
from .errors import ExtractFailure, NotFound, StegError
from .jpeg import ijg_quant_table, parse_jpeg, serialize_jpeg

log = logging.getLogger("stegarmor")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXHAUSTED = 2
EXIT_FAILED = 2


def read_bits(path) -> np.ndarray:
    text = "".join(Path(path).read_text().split())
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"{path}: message files hold a single string of 0/1 characters")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


def write_bits(path, bits) -> None:
    Path(path).write_text("".join("1" if b else "0" for b in np.asarray(bits).tolist()) + "\n")


def _sidecar(stego_path: Path, kind: str) -> Path:
    return stego_path.with_name(f"{stego_path.stem}.{kind}")


def cmd_embed(args) -> int:
    cover_path = Path(args.cover)
    cover = parse_jpeg(cover_path.read_bytes())
    out = Path(args.out or "stego.jpg")
    channel = ChannelModel(None, lossless=True) if args.lossless else ChannelModel(args.q_channel)
    if args.message:
        message = read_bits(args.message)
    else:
        message = random_message(message_length(cover, args.payload), args.seed)
    cfg = EmbedConfig(
        alpha=args.alpha, threshold=args.threshold, h=args.h, channel=channel,
        payload=args.payload, stc_seed=args.stc_seed, crc=args.crc,
    )
    analysis = CoverAnalysis(cover, cfg.alpha)
    if args.dump_costs:
        dump_cost_maps(args.dump_costs, cover, analysis.costs, analysis.dither)
    stego, recipe, report = embed(cover, message, cfg, analysis)

    out.write_bytes(serialize_jpeg(stego))
    _sidecar(out, "recipe.json").write_text(recipe.to_json())
    report_doc = report.to_dict()
    report_doc["channel_qf"] = None if args.lossless else channel.quality_for(cover)
    _sidecar(out, "report.json").write_text(json.dumps(report_doc, indent=2) + "\n")
    if not args.message:
        write_bits(_sidecar(out, "message.txt"), message)
    print(f"{out}: E_n={recipe.e_n} t={recipe.t} n_m={recipe.n_m} "
          f"R_e={report.error_rate:.6g} attempts={len(report.attempts)}"
          + (" EXHAUSTED" if report.exhausted else ""))
    return EXIT_EXHAUSTED if report.exhausted else EXIT_OK


def cmd_extract(args, parser) -> int:
    stego = parse_jpeg(Path(args.stego).read_bytes())
    if args.auto:
        if args.n_m is None:
            parser.error("--auto needs --n-m")
        table = ijg_quant_table(args.q_cover) if args.q_cover else stego.table
        try:
            bits, e_n, t = auto_extract(stego, args.n_m, args.h, args.stc_seed, table)
        except NotFound as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAILED
        log.info("auto-detected E_n=%d t=%d", e_n, t)
        print(f"detected E_n={e_n} t={t}")
    else:
        if not args.recipe:
            parser.error("extract needs --recipe (or --auto with a CRC-protected message)")
        recipe = StegoRecipe.from_json(Path(args.recipe).read_text())
        try:
            bits = extract(stego, recipe)
            failed = False
        except ExtractFailure as exc:
            print(f"error: {exc}", file=sys.stderr)
            bits = exc.bits
            failed = True
        if failed and not args.truth:
            return EXIT_FAILED
    if args.out:
        write_bits(args.out, bits)
    if args.truth:
        truth = read_bits(args.truth)
        n = max(len(truth), 1)
        common = min(len(truth), len(bits))
        errors = int(np.sum(truth[:common] != bits[:common])) + abs(len(truth) - len(bits))
        print(f"R_error={errors / n:.6g} ({errors}/{len(truth)} bits)")
        if not args.auto and failed:
            return EXIT_FAILED
    return EXIT_OK


def cmd_simulate(args) -> int:
    img = parse_jpeg(Path(args.stego).read_bytes())
    q = args.q_channel if args.q_channel is not None else cover_quality(img)
    out = recompress(img, q)
    Path(args.out).write_bytes(serialize_jpeg(out))
    print(f"{args.out}: recompressed at QF {q}")
    return EXIT_OK


def _spec_from_args(args) -> experiments.ExperimentSpec:
    spec = experiments.ExperimentSpec.from_json(args.config) if args.config else experiments.ExperimentSpec()
    if args.images:
        spec.image_dir = args.images
    if args.synthetic is not None:
        spec.synthetic = args.synthetic
    if args.payloads:
        spec.payloads = args.payloads
    if args.thresholds:
        spec.thresholds = args.thresholds
    if args.q_channel is not None:
        spec.q_channel = args.q_channel
    if args.q_cover is not None:
        spec.q_cover = args.q_cover
    if args.alpha is not None:
        spec.alpha = args.alpha
    if args.seed is not None:
        spec.message_seed = args.seed
    if args.workers is not None:
        spec.workers = args.workers
    if not (spec.images or spec.image_dir or spec.synthetic):
        spec.synthetic = 20
    return spec


def _write_csv(text: str, out) -> None:
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args) -> int:
    spec = _spec_from_args(args)
    rows, summary = experiments.run_bench(spec, timing=args.timing)
    _write_csv(experiments.to_csv(rows + summary, experiments.BENCH_FIELDS, args.timing), args.out)
    return EXIT_OK


def cmd_ablate(args) -> int:
    spec = _spec_from_args(args)
    rows, summary = experiments.run_ablation(spec, args.mode)
    _write_csv(experiments.to_csv(rows + summary, experiments.ABLATE_FIELDS), args.out)
    return EXIT_OK


def cmd_corpus(args) -> int:
    paths = write_corpus(args.out, args.n, args.size, args.q_cover, args.seed)
    print(f"wrote {len(paths)} covers to {args.out}")
    return EXIT_OK


def _qf(value: str) -> int:
    q = int(value)
    if not 1 <= q <= 100:
        raise argparse.ArgumentTypeError("quality factor must be in 1..100")
    return q


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stegarmor", description="Robust adaptive JPEG steganography")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a message into a cover JPEG")
    p.add_argument("--cover", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--payload", type=float, help="bits per nonzero AC coefficient")
    src.add_argument("--message", help="file holding the message as 0/1 characters")
    p.add_argument("--q-channel", type=_qf, help="channel quality factor (default: cover's)")
    p.add_argument("--lossless", action="store_true", help="skip channel simulation")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--h", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="message generator seed")
    p.add_argument("--stc-seed", type=int, default=0)
    p.add_argument("--crc", action="store_true", help="prefix a CRC-32 for --auto extraction")
    p.add_argument("--dump-costs", metavar="DIR")
    p.add_argument("--out", help="stego path (default stego.jpg); sidecars share its stem")

    p = sub.add_parser("extract", help="recover a message from a stego JPEG")
    p.add_argument("--stego", required=True)
    p.add_argument("--recipe")
    p.add_argument("--auto", action="store_true")
    p.add_argument("--n-m", type=int, help="message length for --auto")
    p.add_argument("--q-cover", type=_qf, help="embed-time cover QF for --auto")
    p.add_argument("--h", type=int, default=10)
    p.add_argument("--stc-seed", type=int, default=0)
    p.add_argument("--truth", help="reference message file; prints R_error")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="recompress a JPEG through the channel model")
    p.add_argument("--stego", required=True)
    p.add_argument("--q-channel", type=_qf)
    p.add_argument("--out", required=True)

    for name, help_ in (("bench", "robustness sweep over payloads and thresholds"),
                        ("ablate", "fixed-domain / fixed-capability ablations")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file mirroring ExperimentSpec")
        p.add_argument("--images", help="directory of cover images")
        p.add_argument("--synthetic", type=int, help="number of synthetic covers")
        p.add_argument("--payloads", type=float, nargs="+")
        p.add_argument("--thresholds", type=float, nargs="+")
        p.add_argument("--q-channel", type=_qf)
        p.add_argument("--q-cover", type=_qf)
        p.add_argument("--alpha", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
        if name == "bench":
            p.add_argument("--timing", action="store_true", help="add a wall_time column")
        else:
            p.add_argument("--mode", choices=experiments.ABLATION_MODES, required=True)

    p = sub.add_parser("corpus", help="write the seeded synthetic cover set")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--q-cover", type=_qf, default=75)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "embed":
            return cmd_embed(args)
        if args.command == "extract":
            return cmd_extract(args, parser)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "ablate":
            return cmd_ablate(args)
        return cmd_corpus(args)
    except (StegError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
