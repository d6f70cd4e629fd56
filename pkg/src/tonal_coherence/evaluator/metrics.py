"""
Coherence metrics for a single piece.

- tonal focus: share of pitch content within +-k fifths of the tonic
- tonal connection: the fitted TDM path length lambda*
- weight statistics: fifth dominance, weight entropy (nats), weight kurtosis
- chromatic focus: tonal focus recomputed on the 12-cycle of fifths
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, NamedTuple, Optional

import numpy as np
from scipy.stats import entropy, kurtosis

from tonal_coherence.model.tdm import TdmFit
from tonal_coherence.pitch.key_estimation import TonalCenter
from tonal_coherence.pitch.space import (
    MAX_INDEX,
    N_CHROMA,
    ChromaticDistribution,
    LofDistribution,
)
from tonal_coherence.utils.errors import DegenerateWeightsError, EmptyInputError

logger = logging.getLogger(__name__)

MAX_K = 17
MAX_CHROMATIC_K = 6
# population second moment below this is treated as a constant vector
KURTOSIS_MIN_VARIANCE = 1e-15


@dataclass(frozen=True)
class FocusProfile:
    """Tonal focus keyed by window half-width k."""
    values: Dict[int, float]

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    @property
    def ks(self):
        return sorted(self.values)


@dataclass(frozen=True)
class WeightStats:
    fifth_dominance: float
    weight_entropy: float
    weight_kurtosis: Optional[float]  # None when the six weights are (near) constant

    @property
    def kurtosis_defined(self) -> bool:
        return self.weight_kurtosis is not None


class ConnectionEstimate(NamedTuple):
    value: float
    converged: bool


def tonal_focus(d: LofDistribution, center: TonalCenter, k: int) -> float:
    """Sum of d over [c-k, c+k], clamped to the 0..34 array."""
    if not 0 <= k <= MAX_K:
        raise ValueError(f"k must be in 0..{MAX_K}, got {k}")
    if d.is_empty:
        raise EmptyInputError("Tonal focus of an empty distribution")
    c = center.lof_index
    lo = max(0, c - k)
    hi = min(MAX_INDEX, c + k)
    return float(min(1.0, d.weights[lo:hi + 1].sum()))


def focus_profile(d: LofDistribution, center: TonalCenter, ks: Iterable[int]) -> FocusProfile:
    return FocusProfile(values={int(k): tonal_focus(d, center, int(k)) for k in ks})


def tonal_connection(fit: TdmFit) -> ConnectionEstimate:
    """lambda* of the fit, with the convergence flag carried alongside."""
    if not fit.converged:
        logger.warning("Tonal connection taken from an unconverged fit (lambda=%.4g)", fit.params.lam)
    return ConnectionEstimate(value=float(fit.params.lam), converged=fit.converged)


def weight_stats(w: Iterable[float]) -> WeightStats:
    """
    Summary statistics of a six-element interval weight vector
    ordered [w-4, w-3, w-1, w+1, w+3, w+4].

    Kurtosis is Fisher excess kurtosis from population central moments.
    """
    w = np.asarray(list(w), dtype=float)
    if w.shape != (6,):
        raise ValueError(f"Expected 6 interval weights, got shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("Interval weights must be non-negative")
    total = w.sum()
    if total <= 0:
        raise DegenerateWeightsError("Interval weights sum to zero")

    fifth_dominance = float((w[2] + w[3]) / total)
    # scipy normalizes to a probability vector and uses 0 log 0 = 0
    weight_entropy = float(entropy(w))

    m2 = float(np.mean((w - w.mean()) ** 2))
    if m2 < KURTOSIS_MIN_VARIANCE:
        weight_kurtosis = None
    else:
        weight_kurtosis = float(kurtosis(w, fisher=True, bias=True))

    return WeightStats(
        fifth_dominance=fifth_dominance,
        weight_entropy=weight_entropy,
        weight_kurtosis=weight_kurtosis,
    )


def chromatic_focus(cd: ChromaticDistribution, tonic_pc: int, k: int) -> float:
    """Mass within k fifths of the tonic on the (modular) circle of fifths."""
    if not 0 <= k <= MAX_CHROMATIC_K:
        raise ValueError(f"k must be in 0..{MAX_CHROMATIC_K}, got {k}")
    if cd.is_empty:
        raise EmptyInputError("Chromatic focus of an empty distribution")
    members = {(tonic_pc + 7 * j) % N_CHROMA for j in range(-k, k + 1)}
    return float(min(1.0, cd.weights[sorted(members)].sum()))


def pitch_entropy_bits(cd: ChromaticDistribution) -> float:
    """Shannon entropy in bits of a chromatic distribution (used by corpus filters)."""
    p = cd.weights[cd.weights > 0]
    return float(-np.sum(p * np.log2(p)))
