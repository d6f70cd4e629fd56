"""
Writers for the per-piece report, the structured summary and the figure data.

Everything here is byte-reproducible: fixed column order, numbers through
utils.formatting, "\n" line endings, sorted JSON keys.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from tonal_coherence.analysis.pipeline import PieceAnalysis
from tonal_coherence.analysis.stats import CorpusStats
from tonal_coherence.model.tdm import STEP_OFFSETS
from tonal_coherence.utils.formatting import MISSING, fmt_num, round_sig

logger = logging.getLogger(__name__)

Formatter = Callable[[Optional[float]], str]


def report_columns(ks: Iterable[int]) -> List[str]:
    return (
        ["id", "group", "key", "mode"]
        + [f"focus_k{k}" for k in sorted(set(ks))]
        + [
            "lambda",
            "fifth_dominance",
            "weight_entropy",
            "weight_kurtosis",
            "loglik",
            "renormalized_mass",
            "chromatic_focus",
            "converged",
            "filter_verdict",
            "archetype",
        ]
    )


def report_row(a: PieceAnalysis, ks: Iterable[int], fmt: Formatter = fmt_num) -> List[str]:
    ks = sorted(set(ks))
    if a.center is None:
        blanks = [MISSING] * (len(ks) + 8)
        return [a.id, a.group, MISSING, MISSING] + blanks + [a.filter_verdict, MISSING]

    focus = [fmt(a.focus_profile.values.get(k, a.focus if k == a.k else None)) for k in ks]
    ws = a.weight_stats
    return (
        [a.id, a.group, a.center.label, a.center.mode]
        + focus
        + [
            fmt(a.connection),
            fmt(ws.fifth_dominance),
            fmt(ws.weight_entropy),
            fmt(ws.weight_kurtosis),
            fmt(a.fit.log_likelihood),
            fmt(a.fit.renormalized_mass),
            fmt(a.chromatic_focus),
            "yes" if a.fit.converged else "no",
            a.filter_verdict,
            a.archetype or MISSING,
        ]
    )


def _tsv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info("Wrote %s", path)
    return path


def report_tsv(analyses: Sequence[PieceAnalysis], ks: Iterable[int], fmt: Formatter = fmt_num) -> str:
    ks = sorted(set(ks))
    return _tsv_text(report_columns(ks), (report_row(a, ks, fmt) for a in analyses))


def analysis_to_dict(a: PieceAnalysis) -> Dict:
    """JSON-ready view of one analysis (distribution and weights included)."""
    out: Dict = {"id": a.id, "group": a.group, "status": a.status, "filter_verdict": a.filter_verdict}
    if a.error:
        out["error"] = a.error
    if a.center is None:
        return out
    out.update(
        {
            "key": a.center.label,
            "mode": a.center.mode,
            "key_source": a.center.source,
            "lof_index": a.center.lof_index,
            "key_correlation": round_sig(a.key_correlation),
            "focus": {str(k): round_sig(v) for k, v in sorted(a.focus_profile.values.items())},
            f"focus_k{a.k}": round_sig(a.focus),
            "chromatic_focus": round_sig(a.chromatic_focus),
            "lambda": round_sig(a.connection),
            "weights": [round_sig(w) for w in a.weights],
            "fifth_dominance": round_sig(a.weight_stats.fifth_dominance),
            "weight_entropy": round_sig(a.weight_stats.weight_entropy),
            "weight_kurtosis": round_sig(a.weight_stats.weight_kurtosis),
            "loglik": round_sig(a.fit.log_likelihood),
            "renormalized_mass": round_sig(a.fit.renormalized_mass),
            "converged": a.fit.converged,
            "weights_identifiable": a.fit.weights_identifiable,
            "distribution": [round_sig(p) for p in a.distribution.weights],
            "archetype": a.archetype,
        }
    )
    if a.perturbation is not None:
        out["perturbation"] = {
            f"{offset:+d}": round_sig(lam) for offset, lam in sorted(a.perturbation.shifted_lambda.items())
        }
    return out


def summary_dict(stats: CorpusStats, analyses: Sequence[PieceAnalysis]) -> Dict:
    status_counts = Counter(a.status for a in analyses)
    return {
        "group_by": stats.group_by,
        "n_total": stats.n_total,
        "n_passing": stats.n_passing,
        "status_counts": dict(sorted(status_counts.items())),
        "medians": {k: round_sig(v) for k, v in stats.medians.items()},
        "groups": {
            group: {
                metric: {
                    "n": s.n,
                    "mean": round_sig(s.mean),
                    "sd": round_sig(s.sd),
                    "median": round_sig(s.median),
                }
                for metric, s in metrics.items()
            }
            for group, metrics in stats.group_stats.items()
        },
        "effect_sizes": [
            {"metric": e.metric, "group_a": e.group_a, "group_b": e.group_b, "d": round_sig(e.d), "mark": e.mark}
            for e in stats.effect_sizes
        ],
        "correlations": [
            {"group": c.group, "k": c.k, "r": round_sig(c.r), "n": c.n} for c in stats.correlations
        ],
        "archetype_shares": {
            group: {label: round_sig(share) for label, share in shares.items()}
            for group, shares in stats.archetype_shares.items()
        },
    }


def json_text(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def focus_ridge_rows(analyses: Sequence[PieceAnalysis]) -> List[List[str]]:
    rows = []
    for a in analyses:
        if a.passes:
            rows.extend([a.id, a.group, str(k), fmt_num(a.focus_profile[k])] for k in a.focus_profile.ks)
    return rows


def points_rows(analyses: Sequence[PieceAnalysis]) -> List[List[str]]:
    return [
        [a.id, a.group, fmt_num(a.focus_k3), fmt_num(a.connection), a.archetype or MISSING]
        for a in analyses
        if a.passes
    ]


def perturbation_rows(analyses: Sequence[PieceAnalysis]) -> List[List[str]]:
    rows = []
    for a in analyses:
        if a.perturbation is None:
            continue
        p = a.perturbation
        rows.append(
            [a.id, a.group, fmt_num(p.base_lambda)]
            + [fmt_num(p.shifted_lambda.get(offset)) for offset in (-1, 1)]
            + [fmt_num(p.max_abs_shift)]
        )
    return rows


def write_corpus_outputs(
    output_dir: str | Path,
    analyses: Sequence[PieceAnalysis],
    stats: CorpusStats,
    ks: Iterable[int],
    structured: bool = False,
) -> List[Path]:
    """Write the report, summary and figure data files; returns the written paths."""
    out = Path(output_dir)
    ks = sorted(set(ks))
    written = []

    if structured:
        written.append(_write_text(out / "report.json", json_text([analysis_to_dict(a) for a in analyses])))
    else:
        written.append(_write_text(out / "report.tsv", report_tsv(analyses, ks)))
    written.append(_write_text(out / "summary.json", json_text(summary_dict(stats, analyses))))

    written.append(
        _write_text(out / "focus_ridge.tsv", _tsv_text(["id", "group", "k", "focus"], focus_ridge_rows(analyses)))
    )
    written.append(
        _write_text(
            out / "weight_profiles.tsv",
            _tsv_text(
                ["group", "interval", "mean", "sd", "n"],
                (
                    [r.group, f"{r.interval:+d}", fmt_num(r.mean), fmt_num(r.sd), str(r.n)]
                    for r in stats.weight_profiles
                ),
            ),
        )
    )
    written.append(
        _write_text(
            out / f"aggregates_{stats.group_by}.tsv",
            _tsv_text(
                ["key", "group", "n", "focus_k3", "connection", "year"],
                (
                    [r.key, r.group, str(r.n), fmt_num(r.focus_k3), fmt_num(r.connection), fmt_num(r.year)]
                    for r in stats.aggregates
                ),
            ),
        )
    )
    written.append(
        _write_text(
            out / "points.tsv",
            _tsv_text(["id", "group", "focus_k3", "connection", "archetype"], points_rows(analyses)),
        )
    )
    rows = perturbation_rows(analyses)
    if rows:
        written.append(
            _write_text(
                out / "key_perturbation.tsv",
                _tsv_text(["id", "group", "lambda", "lambda_down", "lambda_up", "max_abs_shift"], rows),
            )
        )
    return written


def weights_header() -> List[str]:
    return [f"w{int(o):+d}" for o in STEP_OFFSETS]
