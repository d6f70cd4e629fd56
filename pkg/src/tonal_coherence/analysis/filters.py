"""
Corpus filtering rules.

A piece is excluded when it has fewer than 5 distinct pitch classes, a pitch
entropy outside 1.5..3.2 bits, a single pitch class above half the duration,
a line-of-fifths focus (k = 3) below 0.3, or an excluded genre. All rules are
evaluated; the verdict lists every failed rule.

Bounds are inclusive on the passing side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from tonal_coherence.evaluator.metrics import pitch_entropy_bits
from tonal_coherence.pitch.space import ChromaticDistribution

BOUND_SLACK = 1e-12

RULE_MIN_UNIQUE_PCS = "min_unique_pcs"
RULE_PITCH_ENTROPY = "pitch_entropy_bits"
RULE_MAX_SINGLE_PC_SHARE = "max_single_pc_share"
RULE_MIN_FOCUS_K3 = "min_focus_k3"
RULE_EXCLUDED_GENRE = "excluded_genre"

DEFAULT_EXCLUDED_GENRES = frozenset({"classical", "jazz", "blues", "new age"})


@dataclass(frozen=True)
class FilterRules:
    min_unique_pcs: int = 5
    pitch_entropy_bits: Tuple[float, float] = (1.5, 3.2)
    max_single_pc_share: float = 0.5
    min_focus_k3: float = 0.3
    excluded_genres: FrozenSet[str] = field(default_factory=lambda: DEFAULT_EXCLUDED_GENRES)

    def __post_init__(self) -> None:
        lo, hi = self.pitch_entropy_bits
        if lo > hi:
            raise ValueError(f"pitch_entropy_bits bounds inverted: {self.pitch_entropy_bits}")
        object.__setattr__(self, "pitch_entropy_bits", (float(lo), float(hi)))
        object.__setattr__(
            self, "excluded_genres", frozenset(g.strip().lower() for g in self.excluded_genres)
        )


def apply_filters(
    chroma: ChromaticDistribution,
    focus_k3: float,
    metadata: Optional[Dict[str, str]] = None,
    rules: Optional[FilterRules] = None,
) -> List[str]:
    """Return the failed rule tags (empty list = piece passes)."""
    rules = rules or FilterRules()
    failed: List[str] = []

    unique_pcs = int(np.count_nonzero(chroma.weights > 0))
    if unique_pcs < rules.min_unique_pcs:
        failed.append(RULE_MIN_UNIQUE_PCS)

    lo, hi = rules.pitch_entropy_bits
    h = pitch_entropy_bits(chroma)
    if h < lo - BOUND_SLACK or h > hi + BOUND_SLACK:
        failed.append(RULE_PITCH_ENTROPY)

    if float(chroma.weights.max()) > rules.max_single_pc_share + BOUND_SLACK:
        failed.append(RULE_MAX_SINGLE_PC_SHARE)

    if focus_k3 < rules.min_focus_k3 - BOUND_SLACK:
        failed.append(RULE_MIN_FOCUS_K3)

    genre = (metadata or {}).get("genre", "")
    if genre and genre.strip().lower() in rules.excluded_genres:
        failed.append(RULE_EXCLUDED_GENRE)

    return failed
