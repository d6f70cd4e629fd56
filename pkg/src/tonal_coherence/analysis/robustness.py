"""
Robustness checks run alongside the main analysis.

key_perturbation refits the TDM with the tonal center moved one fifth in
either direction; a piece whose connection value barely moves is not
sensitive to a slightly wrong key estimate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

from tonal_coherence.model.tdm import fit as fit_tdm
from tonal_coherence.pitch.key_estimation import TonalCenter
from tonal_coherence.pitch.space import MAX_INDEX, NoteEvent, build_lof_distribution
from tonal_coherence.utils.errors import DiffusionOverflowError, FitFailureError

logger = logging.getLogger(__name__)

PERTURBATION_OFFSETS = (-1, 1)


@dataclass(frozen=True)
class PerturbationResult:
    base_lambda: float
    # offset -> lambda* at the shifted center; None when the shift leaves 0..34 or the fit fails
    shifted_lambda: Dict[int, Optional[float]]

    @property
    def max_abs_shift(self) -> Optional[float]:
        shifts = [abs(v - self.base_lambda) for v in self.shifted_lambda.values() if v is not None]
        return max(shifts) if shifts else None


def key_perturbation(
    notes: List[NoteEvent],
    center: TonalCenter,
    base_lambda: float,
    offsets=PERTURBATION_OFFSETS,
) -> PerturbationResult:
    shifted: Dict[int, Optional[float]] = {}
    for offset in offsets:
        idx = center.lof_index + offset
        if not 0 <= idx <= MAX_INDEX:
            shifted[offset] = None
            continue
        # a shifted center may leave the estimation band
        moved = TonalCenter(lof_index=idx, mode=center.mode, source="annotated")
        # unspelled notes are respelled around the moved center
        d = build_lof_distribution(notes, idx)
        try:
            shifted[offset] = fit_tdm(d, moved).params.lam
        except (FitFailureError, DiffusionOverflowError) as e:
            logger.info("Perturbed fit at center %d failed: %s", idx, e)
            shifted[offset] = None
    return PerturbationResult(base_lambda=float(base_lambda), shifted_lambda=shifted)
