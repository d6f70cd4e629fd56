"""
Synthetic piece generation from the Tonal Diffusion Model.

Pieces are sampled walk end points aggregated into spelled note events (one
event per occupied line-of-fifths position, duration = token count), with the
generating key annotated so analysis skips key estimation.

two_group_corpus builds a two-population corpus with a known answer:
group "A" has long fifth-dominated walks (high connection, moderate focus),
group "B" has near-flat walks whose steps are thinned towards the tonic
(low connection, high focus). Inside each group the focus level of a piece is
drawn uncorrelated with its walk rate and reached by solving for the interval
weights on the forward model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from tonal_coherence.dataset.records import PieceRecord
from tonal_coherence.evaluator.metrics import tonal_focus
from tonal_coherence.model.tdm import TdmParams, forward_distribution, make_params, sample_endpoints
from tonal_coherence.pitch.key_estimation import TonalCenter
from tonal_coherence.pitch.space import N_LOF, LofDistribution, NoteEvent, lof_to_chromatic

logger = logging.getLogger(__name__)

GROUP_A = "A"
GROUP_B = "B"

# group A: lambda ~ N(2.2, 0.3), fifth-heavy; the share of thirds sets the focus
A_LAMBDA_MEAN, A_LAMBDA_SD = 2.2, 0.3
A_LAMBDA_RANGE = (1.6, 2.8)
A_THIRD_SHARE = (0.02, 0.8)
A_FOCUS_RANGE = (0.66, 0.76)

# group B: walk rate ~ N(1.2, 0.8), each step kept with probability 1 - t
B_LAMBDA_MEAN, B_LAMBDA_SD = 1.2, 0.8
B_THINNING = (0.6, 0.85)
B_LAMBDA_RANGE = (0.25, 0.9)
B_FOCUS_RANGE = (0.84, 0.96)

FOCUS_K = 3
CENTER_BAND = (11, 22)
DEFAULT_TOKENS = 2000

FIFTHS_ONLY = np.array([0.0, 0.0, 0.5, 0.5, 0.0, 0.0])
MAJOR_THIRDS_ONLY = np.array([0.5, 0.0, 0.0, 0.0, 0.0, 0.5])
FLAT_WEIGHTS = np.full(6, 1.0 / 6.0)


@dataclass(frozen=True)
class SyntheticSpec:
    """Generating parameters of one synthetic piece."""
    params: TdmParams
    center: TonalCenter
    focus_target: Optional[float] = None


def fifth_heavy_weights(third_share: float) -> np.ndarray:
    """[w-4, w-3, w-1, w+1, w+3, w+4] with `third_share` spread over the four thirds."""
    if not 0.0 <= third_share <= 1.0:
        raise ValueError(f"third_share must be in [0, 1], got {third_share}")
    t = third_share / 4.0
    f = (1.0 - third_share) / 2.0
    return np.array([t, t, f, f, t, t])


def tilted_weights(tilt: float) -> np.ndarray:
    """
    Flat weights leaned towards fifths (tilt > 0) or major thirds (tilt < 0).

    tilt = 0 is uniform, +1 fifths only, -1 major thirds only.
    """
    if not -1.0 <= tilt <= 1.0:
        raise ValueError(f"tilt must be in [-1, 1], got {tilt}")
    edge = FIFTHS_ONLY if tilt >= 0 else MAJOR_THIRDS_ONLY
    a = abs(tilt)
    return (1.0 - a) * FLAT_WEIGHTS + a * edge


def expected_focus(params: TdmParams, center: TonalCenter, k: int = FOCUS_K) -> float:
    """Tonal focus of the model distribution itself."""
    return tonal_focus(LofDistribution(forward_distribution(params, center).probs), center, k)


def solve_weights(
    lam: float,
    center: TonalCenter,
    target: float,
    family: Callable[[float], np.ndarray],
    bounds: Tuple[float, float],
) -> Tuple[np.ndarray, float]:
    """
    Weights from a one-parameter `family` whose model focus equals `target`.

    Returns the weights and the focus they reach; when the target lies outside
    what the family can reach at this lambda the nearer end is used.
    """
    lo, hi = bounds

    def gap(x: float) -> float:
        return expected_focus(make_params(lam, family(x)), center) - target

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo * g_hi > 0:
        x = lo if abs(g_lo) < abs(g_hi) else hi
        logger.debug("Focus %.3f out of reach at lambda=%.3f; using the family end %.3f", target, lam, x)
    else:
        x = brentq(gap, lo, hi, xtol=1e-10)
    weights = family(x)
    return weights, expected_focus(make_params(lam, weights), center)


def decorrelated_targets(rng: np.random.Generator, lams: np.ndarray, bounds: Tuple[float, float]) -> np.ndarray:
    """
    Focus targets spread over `bounds` with zero sample correlation to `lams`.

    Uniform draws are projected off the centred lambdas, then mapped back
    onto the bounds by an affine map.
    """
    lo, hi = bounds
    z = rng.uniform(size=len(lams))
    x = np.asarray(lams, dtype=float) - np.mean(lams)
    if float(x @ x) > 0:
        z = z - (z @ x) / (x @ x) * x
    spread = float(np.ptp(z))
    if spread == 0:
        return np.full(len(lams), (lo + hi) / 2.0)
    return lo + (hi - lo) * (z - z.min()) / spread


def positions_to_notes(positions: np.ndarray) -> List[NoteEvent]:
    counts = np.bincount(np.asarray(positions, dtype=int), minlength=N_LOF)
    return [
        NoteEvent(chromatic_pc=lof_to_chromatic(i), duration=float(c), spelled_lof=i)
        for i, c in enumerate(counts)
        if c > 0
    ]


def synthetic_piece(
    piece_id: str,
    spec: SyntheticSpec,
    n_tokens: int = DEFAULT_TOKENS,
    seed: int = 0,
    group: str = "",
    metadata: Optional[Dict[str, str]] = None,
) -> PieceRecord:
    positions = sample_endpoints(spec.params, spec.center, n_tokens, seed)
    meta = {"lambda": f"{spec.params.lam:.6g}"}
    if spec.focus_target is not None:
        meta["focus_target"] = f"{spec.focus_target:.6g}"
    meta.update(metadata or {})
    return PieceRecord(
        id=piece_id,
        group=group,
        metadata=meta,
        notes=positions_to_notes(positions),
        annotated_key=spec.center,
    )


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float, bounds: Tuple[float, float]) -> float:
    # resample until inside bounds
    lo, hi = bounds
    while True:
        value = float(rng.normal(mean, sd))
        if lo <= value <= hi:
            return value


def _random_center(rng: np.random.Generator) -> TonalCenter:
    lo, hi = CENTER_BAND
    return TonalCenter(lof_index=int(rng.integers(lo, hi + 1)), mode="major", source="annotated")


def group_a_rate(rng: np.random.Generator) -> float:
    return _truncated_normal(rng, A_LAMBDA_MEAN, A_LAMBDA_SD, A_LAMBDA_RANGE)


def group_b_rate(rng: np.random.Generator) -> float:
    """Thinned walk rate (1 - t) * lambda, redrawn until it falls in B_LAMBDA_RANGE."""
    lo, hi = B_LAMBDA_RANGE
    while True:
        lam = _truncated_normal(rng, B_LAMBDA_MEAN, B_LAMBDA_SD, (0.0, np.inf))
        kept = 1.0 - float(rng.uniform(*B_THINNING))
        if lo <= kept * lam <= hi:
            return kept * lam


GROUP_DESIGN = {
    GROUP_A: (group_a_rate, fifth_heavy_weights, A_THIRD_SHARE, A_FOCUS_RANGE),
    GROUP_B: (group_b_rate, tilted_weights, (-1.0, 1.0), B_FOCUS_RANGE),
}


def group_specs(group: str, n: int, rng: np.random.Generator) -> List[SyntheticSpec]:
    """Specs of one group: rates first, then focus targets, then solved weights."""
    draw_rate, family, bounds, focus_range = GROUP_DESIGN[group]
    lams = np.array([draw_rate(rng) for _ in range(n)])
    centers = [_random_center(rng) for _ in range(n)]
    targets = decorrelated_targets(rng, lams, focus_range)
    specs = []
    for lam, center, target in zip(lams, centers, targets):
        weights, _ = solve_weights(float(lam), center, float(target), family, bounds)
        specs.append(SyntheticSpec(make_params(float(lam), weights), center, float(target)))
    return specs


def two_group_corpus(
    n_per_group: int = 25,
    seed: int = 0,
    n_tokens: int = DEFAULT_TOKENS,
) -> List[PieceRecord]:
    """Deterministic two-group corpus (ids A000.., B000..), group A first."""
    if n_per_group < 1:
        raise ValueError(f"n_per_group must be >= 1, got {n_per_group}")
    rng = np.random.default_rng(seed)
    pieces: List[PieceRecord] = []
    for group in (GROUP_A, GROUP_B):
        for i, spec in enumerate(group_specs(group, n_per_group, rng)):
            piece_seed = int(rng.integers(0, 2**31 - 1))
            pieces.append(
                synthetic_piece(f"{group}{i:03d}", spec, n_tokens, piece_seed, group=group)
            )
    logger.info("Generated %d synthetic pieces", len(pieces))
    return pieces
