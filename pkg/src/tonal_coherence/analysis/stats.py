"""
Corpus-level statistics over analyzed pieces.

Only pieces that pass the filters enter the statistics. Groups are compared
pairwise with Cohen's d (pooled SD), and the independence of the two
dimensions is checked with a within-group Pearson r.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import pearsonr

from tonal_coherence.analysis.pipeline import ARCHETYPES, PieceAnalysis
from tonal_coherence.model.tdm import STEP_OFFSETS

logger = logging.getLogger(__name__)

SUMMARY_METRICS = ("focus_k3", "connection")
EFFECT_METRICS = (
    "focus_k3",
    "connection",
    "fifth_dominance",
    "weight_entropy",
    "weight_kurtosis",
    "chromatic_focus",
)
# (threshold, mark), checked from the largest down
SIGNIFICANCE_MARKS = ((0.8, "***"), (0.5, "**"), (0.2, "*"))
MIN_VARIANCE = 1e-15


@dataclass(frozen=True)
class GroupSummary:
    n: int
    mean: Optional[float]
    sd: Optional[float]
    median: Optional[float]


@dataclass(frozen=True)
class EffectSize:
    metric: str
    group_a: str
    group_b: str
    d: Optional[float]  # None when the pooled SD is zero or a group is too small

    @property
    def mark(self) -> str:
        return significance_mark(self.d)


@dataclass(frozen=True)
class Correlation:
    group: str
    k: int
    r: Optional[float]
    n: int


@dataclass(frozen=True)
class AggregateRow:
    key: str
    group: str
    n: int
    focus_k3: float
    connection: float
    year: Optional[float]


@dataclass(frozen=True)
class WeightProfileRow:
    group: str
    interval: int
    mean: float
    sd: Optional[float]
    n: int


@dataclass
class CorpusStats:
    group_by: str
    n_total: int
    n_passing: int
    groups: List[str]
    group_stats: Dict[str, Dict[str, GroupSummary]]
    effect_sizes: List[EffectSize]
    correlations: List[Correlation]
    archetype_shares: Dict[str, Dict[str, float]]
    aggregates: List[AggregateRow]
    weight_profiles: List[WeightProfileRow]
    medians: Dict[str, float] = field(default_factory=dict)


def significance_mark(d: Optional[float]) -> str:
    if d is None:
        return ""
    for threshold, mark in SIGNIFICANCE_MARKS:
        if abs(d) >= threshold:
            return mark
    return ""


def cohens_d(a: Sequence[float], b: Sequence[float]) -> Optional[float]:
    """(mean_a - mean_b) / pooled SD, with sample (n-1) variances; None if undefined."""
    x1 = np.asarray([v for v in a if v is not None and not math.isnan(v)], dtype=float)
    x2 = np.asarray([v for v in b if v is not None and not math.isnan(v)], dtype=float)
    n1, n2 = len(x1), len(x2)
    if n1 < 2 or n2 < 2:
        return None
    s1 = np.std(x1, ddof=1)
    s2 = np.std(x2, ddof=1)
    pooled_var = ((n1 - 1) * s1 ** 2 + (n2 - 1) * s2 ** 2) / (n1 + n2 - 2)
    if pooled_var < MIN_VARIANCE:
        return None
    return float((x1.mean() - x2.mean()) / math.sqrt(pooled_var))


def pearson_r(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Pearson correlation, None for fewer than 3 pairs or a constant column."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    return float(pearsonr(x, y)[0])


def _optional(value) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def analyses_frame(analyses: Sequence[PieceAnalysis], group_by: str = "group") -> pd.DataFrame:
    """One row per passing piece with every metric as a column."""
    rows = []
    for a in analyses:
        if not a.passes:
            continue
        row = {
            "id": a.id,
            "group": a.group,
            "aggregate_key": a.group if group_by == "group" else a.metadata.get(group_by, ""),
            "year": _parse_year(a.metadata.get("year")),
            "focus_k3": a.focus_k3,
            "connection": a.connection,
            "fifth_dominance": a.weight_stats.fifth_dominance,
            "weight_entropy": a.weight_stats.weight_entropy,
            "weight_kurtosis": np.nan if a.weight_stats.weight_kurtosis is None else a.weight_stats.weight_kurtosis,
            "chromatic_focus": a.chromatic_focus,
            "archetype": a.archetype,
        }
        for k in a.focus_profile.ks:
            row[f"focus_k{k}"] = a.focus_profile[k]
        for offset, w in zip(STEP_OFFSETS, a.weights):
            row[f"w{int(offset):+d}"] = float(w)
        rows.append(row)
    return pd.DataFrame(rows)


def _parse_year(raw: Optional[str]) -> float:
    if raw is None or str(raw).strip() == "":
        return np.nan
    try:
        return float(raw)
    except ValueError:
        logger.debug("Ignoring non-numeric year %r", raw)
        return np.nan


def _group_summaries(df: pd.DataFrame) -> Dict[str, Dict[str, GroupSummary]]:
    out: Dict[str, Dict[str, GroupSummary]] = {}
    for group, sub in df.groupby("group", sort=True):
        out[str(group)] = {
            metric: GroupSummary(
                n=int(sub[metric].count()),
                mean=_optional(sub[metric].mean()),
                sd=_optional(sub[metric].std(ddof=1)),
                median=_optional(sub[metric].median()),
            )
            for metric in SUMMARY_METRICS
        }
    return out


def _effect_sizes(df: pd.DataFrame, groups: List[str], focus_columns: List[str]) -> List[EffectSize]:
    metrics = list(EFFECT_METRICS) + [c for c in focus_columns if c != "focus_k3"]
    sizes = []
    for group_a, group_b in combinations(groups, 2):
        a = df[df["group"] == group_a]
        b = df[df["group"] == group_b]
        for metric in metrics:
            sizes.append(
                EffectSize(metric, group_a, group_b, cohens_d(a[metric].tolist(), b[metric].tolist()))
            )
    return sizes


def _correlations(df: pd.DataFrame, groups: List[str], ks: List[int]) -> List[Correlation]:
    out = []
    for group in groups:
        sub = df[df["group"] == group]
        for k in ks:
            column = "focus_k3" if k == 3 else f"focus_k{k}"
            out.append(Correlation(group, k, pearson_r(sub[column], sub["connection"]), len(sub)))
    return out


def _archetype_shares(df: pd.DataFrame, groups: List[str]) -> Dict[str, Dict[str, float]]:
    if df["archetype"].isna().all():
        return {}
    shares = {}
    for group in groups:
        labels = df.loc[df["group"] == group, "archetype"].dropna()
        total = len(labels)
        counts = labels.value_counts()
        shares[group] = {
            label: (float(counts.get(label, 0)) / total if total else 0.0) for label in ARCHETYPES
        }
    return shares


def _aggregates(df: pd.DataFrame) -> List[AggregateRow]:
    grouped = (
        df.groupby(["aggregate_key", "group"], sort=True)
        .agg(
            n=("id", "count"),
            focus_k3=("focus_k3", "mean"),
            connection=("connection", "mean"),
            year=("year", "mean"),
        )
        .reset_index()
    )
    rows = [
        AggregateRow(
            key=str(r.aggregate_key),
            group=str(r.group),
            n=int(r.n),
            focus_k3=float(r.focus_k3),
            connection=float(r.connection),
            year=_optional(r.year),
        )
        for r in grouped.itertuples(index=False)
    ]
    if any(r.year is not None for r in rows):
        # chronological trajectory; rows without a year go last
        rows.sort(key=lambda r: (r.year is None, r.year if r.year is not None else 0.0, r.key, r.group))
    return rows


def _weight_profiles(df: pd.DataFrame, groups: List[str]) -> List[WeightProfileRow]:
    out = []
    for group in groups:
        sub = df[df["group"] == group]
        for offset in STEP_OFFSETS:
            col = sub[f"w{int(offset):+d}"]
            out.append(
                WeightProfileRow(
                    group=group,
                    interval=int(offset),
                    mean=float(col.mean()),
                    sd=_optional(col.std(ddof=1)),
                    n=int(col.count()),
                )
            )
    return out


def corpus_stats(
    analyses: Sequence[PieceAnalysis],
    group_by: str = "group",
    medians: Optional[Dict[str, float]] = None,
) -> CorpusStats:
    """Group summaries, effect sizes, correlations, archetype shares and aggregates."""
    df = analyses_frame(analyses, group_by)
    n_total = len(analyses)
    if df.empty:
        logger.warning("No passing pieces; corpus statistics are empty")
        return CorpusStats(group_by, n_total, 0, [], {}, [], [], {}, [], [], dict(medians or {}))

    groups = sorted(str(g) for g in df["group"].unique())
    ks = sorted(int(c[len("focus_k"):]) for c in df.columns if c.startswith("focus_k"))
    focus_columns = [f"focus_k{k}" for k in ks]
    if len(groups) < 2:
        logger.info("Only one group (%s); no effect sizes", groups[0])

    return CorpusStats(
        group_by=group_by,
        n_total=n_total,
        n_passing=len(df),
        groups=groups,
        group_stats=_group_summaries(df),
        effect_sizes=_effect_sizes(df, groups, focus_columns),
        correlations=_correlations(df, groups, ks),
        archetype_shares=_archetype_shares(df, groups),
        aggregates=_aggregates(df),
        weight_profiles=_weight_profiles(df, groups),
        medians=dict(medians or {}),
    )
