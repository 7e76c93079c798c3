"""Command line front end: embed / emotions / figures."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .diversity import write_diversity_table
from .embedding import HashingEncoder, SentenceTransformerEncoder, embed_corpus, write_corpus
from .emotions import LexiconEmotionClassifier, TransformersEmotionClassifier, emotion_rows, emotion_series
from .errors import InputError, SetupError
from .figures import render_run_figures, render_sweep_figures
from .runio import read_transcript, write_tsv

log = logging.getLogger("fieldlens")


def _build_encoder(args) -> object:
    if args.encoder == "hashing":
        return HashingEncoder(dim=args.dim)
    return SentenceTransformerEncoder(model_name=args.model)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldlens",
        description="Embeddings, emotions, diversity, and figures for "
                    "simulation run directories.",
    )
    parser.add_argument("--version", action="version",
                        version=f"fieldlens {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="suppress progress output")
    commands = parser.add_subparsers(dest="command", required=True)

    embed = commands.add_parser("embed", help="embed transcript texts to 2D")
    embed.add_argument("--run", required=True, help="run directory")
    embed.add_argument("--kind", choices=("message", "memory", "both"),
                       default="both")
    embed.add_argument("--encoder", choices=("hashing", "sentence"),
                       default="hashing")
    embed.add_argument("--model", default="all-MiniLM-L6-v2",
                       help="sentence-transformer model name")
    embed.add_argument("--dim", type=int, default=64,
                       help="hashing encoder dimension")
    embed.add_argument("--seed", type=int, default=0,
                       help="projection seed, recorded in the output")
    embed.add_argument("--out", help="output directory "
                                     "(default: <run>/analysis)")

    emotions = commands.add_parser(
        "emotions", help="score six emotion channels per message")
    emotions.add_argument("--run", required=True, help="run directory")
    emotions.add_argument("--classifier", choices=("lexicon", "model"),
                          default="lexicon")
    emotions.add_argument("--model",
                          default="bhadresh-savani/bert-base-uncased-emotion")
    emotions.add_argument("--out", help="output file "
                                        "(default: <run>/analysis/emotions.tsv)")

    figures = commands.add_parser("figures", help="render the figure suite")
    target = figures.add_mutually_exclusive_group(required=True)
    target.add_argument("--run", help="run directory")
    target.add_argument("--sweep", help="sweep directory")
    figures.add_argument("--out", help="output directory "
                                       "(default: <dir>/figures)")
    figures.add_argument("--seed", type=int, default=0,
                         help="projection and layout seed")
    figures.add_argument("--dim", type=int, default=64,
                         help="hashing encoder dimension")

    diversity = commands.add_parser(
        "diversity", help="write the per-range diversity table for a sweep")
    diversity.add_argument("--sweep", required=True, help="sweep directory")
    diversity.add_argument("--seed", type=int, default=0)
    diversity.add_argument("--dim", type=int, default=64)
    diversity.add_argument("--out", help="output file (default: "
                                         "<sweep>/figures/diversity_by_range.tsv)")
    return parser


def _cmd_embed(args) -> int:
    run_dir = Path(args.run)
    rows = read_transcript(run_dir / "transcript.jsonl")
    out_dir = Path(args.out) if args.out else run_dir / "analysis"
    encoder = _build_encoder(args)
    kinds = ("message", "memory") if args.kind == "both" else (args.kind,)
    for kind in kinds:
        corpus = embed_corpus(rows, kind, encoder=encoder, seed=args.seed)
        path = write_corpus(corpus, out_dir / f"embeddings_{kind}.jsonl")
        log.info("wrote %s (%d items, %s)", path, len(corpus.items),
                 corpus.projection)
    return 0


def _cmd_emotions(args) -> int:
    run_dir = Path(args.run)
    rows = read_transcript(run_dir / "transcript.jsonl")
    if args.classifier == "lexicon":
        classifier = LexiconEmotionClassifier()
    else:
        classifier = TransformersEmotionClassifier(model_name=args.model)
    points = emotion_series(rows, classifier=classifier)
    out = (Path(args.out) if args.out
           else run_dir / "analysis" / "emotions.tsv")
    header, table = emotion_rows(points)
    write_tsv(out, header, table, comments=(f"classifier {classifier.name}",))
    log.info("wrote %s (%d messages)", out, len(points))
    return 0


def _cmd_figures(args) -> int:
    encoder = HashingEncoder(dim=args.dim)
    if args.run:
        report = render_run_figures(args.run, out_dir=args.out,
                                    encoder=encoder, seed=args.seed)
    else:
        report = render_sweep_figures(args.sweep, out_dir=args.out,
                                      encoder=encoder, seed=args.seed)
    for path in report.written:
        log.info("wrote %s", path)
    for name, reason in report.skipped:
        log.warning("skipped %s: %s", name, reason)
    if not report.written:
        log.error("nothing could be rendered")
        return 1
    return 0


def _cmd_diversity(args) -> int:
    sweep_dir = Path(args.sweep)
    out = (Path(args.out) if args.out
           else sweep_dir / "figures" / "diversity_by_range.tsv")
    path = write_diversity_table(sweep_dir, out,
                                 encoder=HashingEncoder(dim=args.dim),
                                 seed=args.seed)
    log.info("wrote %s", path)
    return 0


_COMMANDS = {
    "embed": _cmd_embed,
    "emotions": _cmd_emotions,
    "figures": _cmd_figures,
    "diversity": _cmd_diversity,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s", stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        log.error("input error: %s", exc)
        return 2
    except SetupError as exc:
        log.error("setup error: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
