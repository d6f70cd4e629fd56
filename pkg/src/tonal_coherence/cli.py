from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, Optional

from tonal_coherence.analysis.export import (
    analysis_to_dict,
    json_text,
    report_columns,
    report_row,
    weights_header,
    write_corpus_outputs,
)
from tonal_coherence.analysis.filters import FilterRules
from tonal_coherence.analysis.pipeline import (
    STATUS_OK,
    analyze_entries,
    analyze_piece,
    archetype_medians,
    classify_archetypes,
    resolve_center,
)
from tonal_coherence.analysis.stats import corpus_stats
from tonal_coherence.config.loader import AppConfig, load_config, parse_k_range, validate_config
from tonal_coherence.dataset.manifest import load_manifest, load_piece_file
from tonal_coherence.dataset.notes_table import write_notes_table
from tonal_coherence.model.tdm import STEP_OFFSETS, fit as fit_tdm, make_params, sample_endpoints
from tonal_coherence.pitch.key_estimation import TonalCenter, estimate_key, parse_key_label
from tonal_coherence.pitch.space import build_chromatic_distribution, build_lof_distribution, lof_name
from tonal_coherence.utils.errors import (
    ConfigurationError,
    DegenerateProfileError,
    DiffusionOverflowError,
    EmptyInputError,
    FitFailureError,
    InsufficientDataError,
    MidiParseError,
    NotesTableError,
    UnsupportedFormatError,
)
from tonal_coherence.utils.formatting import fmt_fixed
from tonal_coherence.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ANALYSIS = 3
EXIT_USAGE = 64


class ArgumentParser(argparse.ArgumentParser):
    """argparse with the usage-error exit code moved from 2 to 64."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------- argument types ----------

def _key_arg(text: str) -> TonalCenter:
    try:
        return parse_key_label(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _center_arg(text: str) -> TonalCenter:
    """Line-of-fifths index (0..34) or a key label."""
    try:
        return TonalCenter(lof_index=int(text))
    except ValueError:
        pass
    return _key_arg(text)


def _weights_arg(text: str):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must be 6 comma-separated numbers, got {text!r}")
    if len(values) != 6 or not all(math.isfinite(v) and v >= 0 for v in values) or sum(values) <= 0:
        raise argparse.ArgumentTypeError(f"weights must be 6 non-negative numbers with positive sum, got {text!r}")
    return values


def _k_range_arg(text: str):
    try:
        return parse_k_range(text)
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e))


def _non_negative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not math.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a finite value >= 0, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


# ---------- parser ----------

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="tonal-coherence",
        description="Tonal focus and tonal connection of symbolic music",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def add_common_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="Path to YAML config (defaults to config/default.yaml)")
        p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
        p.add_argument("--quiet", action="store_true", help="Only errors on stderr, no progress bar")

    def add_analysis_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--k", type=int, help="Primary focus window half-width (default 3)")
        p.add_argument("--k-range", type=_k_range_arg, help="Focus profile range, e.g. 2..7")
        p.add_argument("--format", choices=["tsv", "structured"], default="tsv")
        p.add_argument("--min-unique-pcs", type=int)
        p.add_argument("--pitch-entropy-bits", type=float, nargs=2, metavar=("LO", "HI"))
        p.add_argument("--max-single-pc-share", type=float)
        p.add_argument("--min-focus-k3", type=float)
        p.add_argument("--excluded-genres", help="Comma-separated genre names ('' for none)")
        p.add_argument("--key-perturbation", action="store_true", help="Refit with the center moved one fifth each way")

    p_analyze = sub.add_parser("analyze", help="Analyze a single piece")
    p_analyze.add_argument("file")
    p_analyze.add_argument("--key", type=_key_arg, help="Annotated key, e.g. C, f#, Bb minor")
    add_common_flags(p_analyze)
    add_analysis_flags(p_analyze)

    p_corpus = sub.add_parser("corpus", help="Analyze a corpus manifest and write report files")
    p_corpus.add_argument("manifest")
    p_corpus.add_argument("--out", "--output-dir", dest="out", help="Output directory")
    p_corpus.add_argument("--group-by", help="Metadata field for aggregate positions")
    p_corpus.add_argument("--jobs", type=_positive_int, help="Worker processes")
    add_common_flags(p_corpus)
    add_analysis_flags(p_corpus)

    p_sample = sub.add_parser("sample", help="Sample a synthetic piece from the TDM as a notes table")
    p_sample.add_argument("--lambda", dest="lam", type=_non_negative_float, required=True)
    p_sample.add_argument("--weights", type=_weights_arg, help="w-4,w-3,w-1,w+1,w+3,w+4 (default uniform)")
    p_sample.add_argument("--center", type=_center_arg, default=TonalCenter(17), help="Index 0..34 or key label (default C)")
    p_sample.add_argument("--n-tokens", type=_positive_int, default=1000)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--id", dest="piece_id", default="sample")
    p_sample.add_argument("--out", help="Output notes table (default stdout)")
    add_common_flags(p_sample)

    p_key = sub.add_parser("estimate-key", help="Krumhansl-Schmuckler key of a piece")
    p_key.add_argument("file")
    p_key.add_argument("--all", action="store_true", help="Print all 24 correlations")
    add_common_flags(p_key)

    p_fit = sub.add_parser("fit", help="Fit the TDM to a piece and print the parameters")
    p_fit.add_argument("file")
    p_fit.add_argument("--key", type=_key_arg)
    add_common_flags(p_fit)

    return parser


# ---------- config ----------

def resolve_config(args: argparse.Namespace) -> AppConfig:
    """Config file (or defaults) with command-line overrides applied."""
    cfg = load_config(Path(args.config) if args.config else None)

    analysis = cfg.analysis
    if getattr(args, "k", None) is not None:
        analysis = replace(analysis, k=args.k)
    if getattr(args, "k_range", None) is not None:
        analysis = replace(analysis, k_range=args.k_range)
    if getattr(args, "group_by", None):
        analysis = replace(analysis, group_by=args.group_by)
    if getattr(args, "jobs", None) is not None:
        analysis = replace(analysis, jobs=args.jobs)
    if getattr(args, "key_perturbation", False):
        analysis = replace(analysis, key_perturbation=True)

    overrides: Dict[str, object] = {}
    for name in ("min_unique_pcs", "max_single_pc_share", "min_focus_k3"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "pitch_entropy_bits", None) is not None:
        overrides["pitch_entropy_bits"] = tuple(args.pitch_entropy_bits)
    if getattr(args, "excluded_genres", None) is not None:
        overrides["excluded_genres"] = frozenset(g for g in args.excluded_genres.split(",") if g.strip())
    try:
        filters: FilterRules = replace(cfg.filters, **overrides)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e

    output = cfg.output
    if getattr(args, "out", None) and args.command == "corpus":
        output = replace(output, output_dir=args.out)

    return validate_config(AppConfig(analysis=analysis, filters=filters, output=output))


def _ks(cfg: AppConfig):
    return sorted(set(cfg.analysis.ks) | {cfg.analysis.k})


def _tsv(rows) -> str:
    buffer = io.StringIO()
    csv.writer(buffer, delimiter="\t", lineterminator="\n").writerows(rows)
    return buffer.getvalue()


# ---------- subcommands ----------

def cmd_analyze(args: argparse.Namespace, cfg: AppConfig) -> int:
    piece = load_piece_file(args.file)
    if args.key is not None:
        piece.annotated_key = args.key
    analysis = analyze_piece(piece, cfg.analysis, cfg.filters)

    if args.format == "structured":
        sys.stdout.write(json_text(analysis_to_dict(analysis)))
        return EXIT_OK

    ks = _ks(cfg)
    rows = [report_columns(ks), report_row(analysis, ks, fmt_fixed), []]
    rows.append(["lof_index", "name", "weight"])
    rows.extend([str(i), lof_name(i), fmt_fixed(w)] for i, w in enumerate(analysis.distribution.weights))
    rows.append([])
    rows.append(["interval", "weight"])
    rows.extend([name, fmt_fixed(w)] for name, w in zip(weights_header(), analysis.weights))
    sys.stdout.write(_tsv(rows))
    return EXIT_OK


def cmd_corpus(args: argparse.Namespace, cfg: AppConfig) -> int:
    entries = load_manifest(args.manifest)
    if not entries:
        raise EmptyInputError(f"Manifest {args.manifest} lists no pieces")

    progress = not args.quiet and sys.stderr.isatty()
    analyses = analyze_entries(entries, cfg.analysis, cfg.filters, cfg.analysis.jobs, progress)

    medians: Dict[str, float] = {}
    try:
        focus_median, connection_median = archetype_medians(analyses)
        medians = {"focus_k3": focus_median, "connection": connection_median}
        analyses = classify_archetypes(analyses)
    except InsufficientDataError as e:
        logger.warning("Archetypes not assigned: %s", e)

    stats = corpus_stats(analyses, cfg.analysis.group_by, medians)
    written = write_corpus_outputs(
        cfg.output.output_dir, analyses, stats, _ks(cfg), structured=args.format == "structured"
    )

    n_ok = sum(a.status == STATUS_OK for a in analyses)
    print(
        f"{len(analyses)} pieces, {n_ok} analyzed, {stats.n_passing} passing filters; "
        f"{len(written)} files written to {cfg.output.output_dir}"
    )
    if n_ok == 0:
        print("error: every piece failed", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def cmd_sample(args: argparse.Namespace, cfg: AppConfig) -> int:
    params = make_params(args.lam, args.weights)
    positions = sample_endpoints(params, args.center, args.n_tokens, args.seed)
    if args.out:
        write_notes_table(args.out, args.piece_id, positions, center=args.center)
    else:
        write_notes_table(sys.stdout, args.piece_id, positions, center=args.center)
    return EXIT_OK


def cmd_estimate_key(args: argparse.Namespace, cfg: AppConfig) -> int:
    piece = load_piece_file(args.file)
    estimate = estimate_key(build_chromatic_distribution(piece.notes))
    c = estimate.center
    rows = [["key", "mode", "lof_index", "correlation"], [c.label, c.mode, str(c.lof_index), fmt_fixed(estimate.correlation)]]
    if args.all:
        rows.append([])
        rows.append(["tonic_pc", "mode", "r"])
        rows.extend([str(s.tonic_pc), s.mode, fmt_fixed(s.r)] for s in estimate.all_scores)
    sys.stdout.write(_tsv(rows))
    return EXIT_OK


def cmd_fit(args: argparse.Namespace, cfg: AppConfig) -> int:
    piece = load_piece_file(args.file)
    if args.key is not None:
        piece.annotated_key = args.key
    if piece.is_empty:
        raise EmptyInputError(f"{args.file} has no non-percussion notes")
    center, _ = resolve_center(piece)
    result = fit_tdm(build_lof_distribution(piece.notes, center.lof_index), center)

    rows = [
        ["key", center.label],
        ["lambda", fmt_fixed(result.params.lam)],
    ]
    rows.extend([f"w{int(o):+d}", fmt_fixed(w)] for o, w in zip(STEP_OFFSETS, result.params.weights))
    rows.extend(
        [
            ["loglik", fmt_fixed(result.log_likelihood)],
            ["renormalized_mass", fmt_fixed(result.renormalized_mass)],
            ["converged", "yes" if result.converged else "no"],
            ["weights_identifiable", "yes" if result.weights_identifiable else "no"],
            ["n_restarts", str(result.n_restarts_used)],
        ]
    )
    sys.stdout.write(_tsv(rows))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, AppConfig], int]] = {
    "analyze": cmd_analyze,
    "corpus": cmd_corpus,
    "sample": cmd_sample,
    "estimate-key": cmd_estimate_key,
    "fit": cmd_fit,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(-1 if args.quiet else args.verbose)

    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UnsupportedFormatError, ConfigurationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (MidiParseError, NotesTableError, EmptyInputError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (FitFailureError, DiffusionOverflowError, DegenerateProfileError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    raise SystemExit(main())
