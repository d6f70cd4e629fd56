"""
Per-piece analysis and corpus runs.

analyze_piece composes the whole measurement chain for one piece:
key (annotated or estimated) -> line-of-fifths distribution -> focus profile
-> TDM fit -> weight statistics -> filter verdict. analyze_entries applies it to a
manifest, optionally across a process pool, and labels archetypes once every
piece is in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from tonal_coherence.analysis.filters import FilterRules, apply_filters
from tonal_coherence.analysis.robustness import PerturbationResult, key_perturbation
from tonal_coherence.config.loader import AnalysisConfig
from tonal_coherence.dataset.manifest import ManifestEntry, load_entry
from tonal_coherence.dataset.records import PieceRecord
from tonal_coherence.evaluator.metrics import (
    MAX_CHROMATIC_K,
    FocusProfile,
    WeightStats,
    chromatic_focus,
    focus_profile,
    tonal_connection,
    tonal_focus,
    weight_stats,
)
from tonal_coherence.model.tdm import TdmFit, fit as fit_tdm
from tonal_coherence.pitch.key_estimation import TonalCenter, estimate_key
from tonal_coherence.pitch.space import (
    LofDistribution,
    build_chromatic_distribution,
    build_lof_distribution,
    collapse_to_chromatic,
)
from tonal_coherence.utils.errors import (
    DegenerateProfileError,
    DiffusionOverflowError,
    EmptyInputError,
    FitFailureError,
    InsufficientDataError,
    TonalCoherenceError,
)

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_INGEST_FAILED = "ingest_failed"
STATUS_EMPTY = "empty"
STATUS_KEY_FAILED = "key_failed"
STATUS_FIT_FAILED = "fit_failed"

CHROMATIC_EXPLORATION = "chromatic exploration"
TEXTURAL_DIATONICISM = "textural diatonicism"
SYSTEMATIC_DIATONICISM = "systematic diatonicism"
EDGE_OF_TONALITY = "edge of tonality"
ARCHETYPES = (
    CHROMATIC_EXPLORATION,
    TEXTURAL_DIATONICISM,
    SYSTEMATIC_DIATONICISM,
    EDGE_OF_TONALITY,
)

PRIMARY_K = 3


@dataclass
class PieceAnalysis:
    """Everything measured for one piece (metric fields are None unless status == 'ok')."""
    id: str
    group: str = ""
    metadata: Dict[str, str] = field(default_factory=dict)
    status: str = STATUS_OK
    error: str = ""
    center: Optional[TonalCenter] = None
    key_correlation: Optional[float] = None
    k: int = PRIMARY_K
    focus_k3: Optional[float] = None
    focus: Optional[float] = None  # at the configured k
    focus_profile: Optional[FocusProfile] = None
    chromatic_focus: Optional[float] = None
    connection: Optional[float] = None
    weight_stats: Optional[WeightStats] = None
    fit: Optional[TdmFit] = None
    distribution: Optional[LofDistribution] = None
    filter_failures: List[str] = field(default_factory=list)
    archetype: Optional[str] = None
    perturbation: Optional[PerturbationResult] = None

    @property
    def passes(self) -> bool:
        return self.status == STATUS_OK and not self.filter_failures

    @property
    def filter_verdict(self) -> str:
        if self.status != STATUS_OK:
            return self.status
        return "pass" if not self.filter_failures else ",".join(self.filter_failures)

    @property
    def weights(self) -> Optional[np.ndarray]:
        return None if self.fit is None else self.fit.params.weights


def resolve_center(piece: PieceRecord) -> Tuple[TonalCenter, Optional[float]]:
    """Annotated key when present, otherwise the Krumhansl-Schmuckler estimate."""
    if piece.annotated_key is not None:
        return piece.annotated_key, None
    estimate = estimate_key(build_chromatic_distribution(piece.notes))
    return estimate.center, estimate.correlation


def analyze_piece(
    piece: PieceRecord,
    config: Optional[AnalysisConfig] = None,
    rules: Optional[FilterRules] = None,
) -> PieceAnalysis:
    """Full measurement chain for one piece; raises on empty input or fit failure."""
    config = config or AnalysisConfig()
    if piece.is_empty:
        raise EmptyInputError(f"Piece {piece.id!r} has no non-percussion notes")

    chroma = build_chromatic_distribution(piece.notes)
    center, correlation = resolve_center(piece)
    d = build_lof_distribution(piece.notes, center.lof_index)

    profile = focus_profile(d, center, config.ks)
    focus_k3 = tonal_focus(d, center, PRIMARY_K)
    focus = tonal_focus(d, center, config.k)

    tdm_fit = fit_tdm(d, center)
    connection = tonal_connection(tdm_fit)
    stats = weight_stats(tdm_fit.params.weights)

    chroma_focus = chromatic_focus(
        collapse_to_chromatic(d), center.tonic_pc, min(config.k, MAX_CHROMATIC_K)
    )
    failures = apply_filters(chroma, focus_k3, piece.metadata, rules)

    perturbation = None
    if config.key_perturbation:
        perturbation = key_perturbation(piece.notes, center, tdm_fit.params.lam)

    logger.debug(
        "%s: key=%s focus_k3=%.4f lambda=%.4f verdict=%s",
        piece.id, center.label, focus_k3, connection.value, failures or "pass",
    )
    return PieceAnalysis(
        id=piece.id,
        group=piece.group,
        metadata=dict(piece.metadata),
        center=center,
        key_correlation=correlation,
        k=config.k,
        focus_k3=focus_k3,
        focus=focus,
        focus_profile=profile,
        chromatic_focus=chroma_focus,
        connection=connection.value,
        weight_stats=stats,
        fit=tdm_fit,
        distribution=d,
        filter_failures=failures,
        perturbation=perturbation,
    )


def failed_analysis(entry_id: str, group: str, metadata: Dict[str, str], status: str, error: str) -> PieceAnalysis:
    return PieceAnalysis(id=entry_id, group=group, metadata=dict(metadata), status=status, error=error)


def analyze_entry(
    entry: ManifestEntry,
    config: Optional[AnalysisConfig] = None,
    rules: Optional[FilterRules] = None,
) -> PieceAnalysis:
    """Load and analyze one manifest row, turning per-piece failures into a status."""
    try:
        piece = load_entry(entry)
    except (OSError, TonalCoherenceError, ValueError) as e:
        logger.warning("%s: ingest failed: %s", entry.id, e)
        return failed_analysis(entry.id, entry.group, entry.metadata, STATUS_INGEST_FAILED, str(e))

    try:
        return analyze_piece(piece, config, rules)
    except EmptyInputError as e:
        logger.warning("%s: %s", entry.id, e)
        status = STATUS_EMPTY
        message = str(e)
    except DegenerateProfileError as e:
        logger.warning("%s: key estimation failed: %s", entry.id, e)
        status = STATUS_KEY_FAILED
        message = str(e)
    except (FitFailureError, DiffusionOverflowError) as e:
        logger.warning("%s: TDM fit failed: %s", entry.id, e)
        status = STATUS_FIT_FAILED
        message = str(e)
    return failed_analysis(piece.id, piece.group, piece.metadata, status, message)


def _analyze_task(task: Tuple[ManifestEntry, AnalysisConfig, FilterRules]) -> PieceAnalysis:
    entry, config, rules = task
    return analyze_entry(entry, config, rules)


def analyze_entries(
    entries: Sequence[ManifestEntry],
    config: Optional[AnalysisConfig] = None,
    rules: Optional[FilterRules] = None,
    jobs: int = 1,
    progress: bool = False,
) -> List[PieceAnalysis]:
    """
    Analyze manifest rows, in manifest order.

    With jobs > 1 pieces are spread over a process pool; imap keeps the input
    order so the result never depends on scheduling.
    """
    config = config or AnalysisConfig()
    rules = rules or FilterRules()
    tasks = [(entry, config, rules) for entry in entries]

    if jobs <= 1 or len(tasks) <= 1:
        return [_analyze_task(t) for t in tqdm(tasks, desc="pieces", disable=not progress)]

    with Pool(processes=jobs) as pool:
        return list(
            tqdm(pool.imap(_analyze_task, tasks), total=len(tasks), desc="pieces", disable=not progress)
        )


def archetype_medians(analyses: Iterable[PieceAnalysis]) -> Tuple[float, float]:
    """Pooled (focus_k3, connection) medians over passing pieces of every group."""
    passing = [a for a in analyses if a.passes]
    if len(passing) < 2:
        raise InsufficientDataError(
            f"Archetypes need at least 2 passing pieces, got {len(passing)}"
        )
    focus_median = float(np.median([a.focus_k3 for a in passing]))
    connection_median = float(np.median([a.connection for a in passing]))
    return focus_median, connection_median


def archetype_label(focus: float, connection: float, focus_median: float, connection_median: float) -> str:
    """Quadrant name; a value equal to its median counts as high."""
    high_connection = connection >= connection_median
    high_focus = focus >= focus_median
    if high_connection and not high_focus:
        return CHROMATIC_EXPLORATION
    if not high_connection and high_focus:
        return TEXTURAL_DIATONICISM
    if high_connection and high_focus:
        return SYSTEMATIC_DIATONICISM
    return EDGE_OF_TONALITY


def classify_archetypes(analyses: Sequence[PieceAnalysis]) -> List[PieceAnalysis]:
    """Label every passing piece with its quadrant; other pieces keep archetype None."""
    focus_median, connection_median = archetype_medians(analyses)
    labeled = []
    for a in analyses:
        if a.passes:
            label = archetype_label(a.focus_k3, a.connection, focus_median, connection_median)
            labeled.append(replace(a, archetype=label))
        else:
            labeled.append(replace(a, archetype=None))
    return labeled
