"""
Tonal Diffusion Model on the line of fifths.

A pitch is reached from the tonal center by a random walk whose number of
steps is Poisson(lambda) and whose steps are drawn from six intervals:
fifths (-1, +1), major thirds (-4, +4) and minor thirds (+3, -3). The model
distribution is the Poisson mixture of n-fold step convolutions, evaluated on
an integer lattice wide enough that no walk falls off it, then cut to the
35-position window and renormalized.

Fitting maximizes sum_i d_i log P(i) over lambda >= 0 and the weight simplex
with a Nelder-Mead search in an unconstrained parameterization
(lambda = exp(a), weights = softmax(b)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln, pdtrc, softmax, xlogy

from tonal_coherence.pitch.key_estimation import TonalCenter
from tonal_coherence.pitch.space import N_LOF, LofDistribution
from tonal_coherence.utils.errors import (
    DiffusionOverflowError,
    EmptyInputError,
    FitFailureError,
)

logger = logging.getLogger(__name__)

# Order of the weight vector: [w-4, w-3, w-1, w+1, w+3, w+4]
STEP_OFFSETS = np.array([-4, -3, -1, 1, 3, 4], dtype=int)
MAX_STEP = 4

TAIL_MASS = 1e-10
MAX_STEPS = 200
PROB_FLOOR = 1e-12
MIN_WINDOW_MASS = 1e-6
SUM_TOLERANCE = 1e-9

UNIFORM_WEIGHTS = np.full(6, 1.0 / 6.0)
FIFTH_HEAVY_WEIGHTS = np.array([0.05, 0.05, 0.4, 0.4, 0.05, 0.05])

LAMBDA_STARTS = (0.25, 1.0, 2.0, 4.0, 8.0)
WEIGHT_STARTS = (UNIFORM_WEIGHTS, FIFTH_HEAVY_WEIGHTS)

# Below this lambda the weight vector has no influence worth reporting.
IDENTIFIABLE_LAMBDA = 1e-3
CONVERGENCE_SPREAD = 1e-8

# Search-space bounds on a = log(lambda); exp(-25) is effectively zero steps.
LOG_LAMBDA_MIN = -25.0
LOG_LAMBDA_MAX = 6.0
_PENALTY = 1e10


@dataclass(frozen=True)
class TdmParams:
    """Poisson mean path length and the six interval weights."""
    lam: float
    weights: np.ndarray

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam!r}")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (6,):
            raise ValueError(f"Expected 6 interval weights, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("Interval weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"Interval weights must sum to 1 (got {w.sum()!r})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lam", float(self.lam))

    def mirrored(self) -> "TdmParams":
        """Swap each interval with its opposite direction."""
        return TdmParams(self.lam, self.weights[::-1].copy())


@dataclass(frozen=True)
class ModelDistribution:
    """Renormalized model probabilities over the window plus the pre-renormalization mass."""
    probs: np.ndarray
    window_mass: float


@dataclass(frozen=True)
class TdmFit:
    params: TdmParams
    log_likelihood: float
    n_restarts_used: int
    converged: bool
    renormalized_mass: float
    weights_identifiable: bool = True
    n_evaluations: int = 0
    start_log_likelihoods: Tuple[float, ...] = field(default_factory=tuple)


def truncation_steps(lam: float) -> int:
    """Smallest N with Poisson tail mass P(n > N) below TAIL_MASS."""
    if lam == 0:
        return 0
    ns = np.arange(MAX_STEPS + 1)
    tails = pdtrc(ns, lam)
    below = np.flatnonzero(tails < TAIL_MASS)
    if below.size == 0:
        raise DiffusionOverflowError(
            f"lambda={lam:.4g} needs more than {MAX_STEPS} walk steps"
        )
    return int(below[0])


def poisson_weights(lam: float, n_max: int) -> np.ndarray:
    """Poisson pmf for n = 0..n_max (lambda = 0 gives a point mass at 0)."""
    n = np.arange(n_max + 1)
    return np.exp(xlogy(n, lam) - lam - gammaln(n + 1))


def _step_kernel(weights: np.ndarray) -> np.ndarray:
    kernel = np.zeros(2 * MAX_STEP + 1)
    kernel[STEP_OFFSETS + MAX_STEP] = weights
    return kernel


def forward_window(params: TdmParams, center: TonalCenter) -> np.ndarray:
    """
    Raw model mass on the 35 window positions, before flooring and renormalization.

    Walk distributions p_n are built by repeated convolution with the step
    kernel on a lattice of width 35 + 2*4*N, so the Poisson mixture is exact up
    to the truncated tail.
    """
    n_max = truncation_steps(params.lam)
    pad = MAX_STEP * n_max
    lattice = np.zeros(N_LOF + 2 * pad)
    lattice[pad + center.lof_index] = 1.0

    pois = poisson_weights(params.lam, n_max)
    kernel = _step_kernel(params.weights)

    total = pois[0] * lattice
    walk = lattice
    for n in range(1, n_max + 1):
        walk = np.convolve(walk, kernel, mode="same")
        total += pois[n] * walk
    return total[pad:pad + N_LOF]


def forward_distribution(params: TdmParams, center: TonalCenter) -> ModelDistribution:
    """Model distribution over the window: floor each cell, then renormalize."""
    raw = forward_window(params, center)
    mass = float(raw.sum())
    if mass < MIN_WINDOW_MASS:
        raise DiffusionOverflowError(
            f"Only {mass:.3g} of the model mass stays in the window (lambda={params.lam:.4g})"
        )
    floored = np.maximum(raw, PROB_FLOOR)
    return ModelDistribution(probs=floored / floored.sum(), window_mass=mass)


def _check_distribution(d: LofDistribution) -> np.ndarray:
    if d.is_empty:
        raise EmptyInputError("Cannot evaluate an empty distribution")
    return d.weights


def log_likelihood(d: LofDistribution, params: TdmParams, center: TonalCenter) -> float:
    """sum_i d_i log P(i) under the floored, renormalized model."""
    weights = _check_distribution(d)
    model = forward_distribution(params, center)
    return float(np.dot(weights, np.log(model.probs)))


def _unpack(x: np.ndarray) -> TdmParams:
    a = float(np.clip(x[0], LOG_LAMBDA_MIN, LOG_LAMBDA_MAX))
    w = softmax(x[1:])
    w = w / w.sum()
    return TdmParams(lam=float(np.exp(a)), weights=w)


def _pack(lam: float, weights: np.ndarray) -> np.ndarray:
    return np.concatenate(([np.log(lam)], np.log(weights)))


class _Objective:
    """Negative log-likelihood in the unconstrained space, counting evaluations."""

    def __init__(self, d: np.ndarray, center: TonalCenter) -> None:
        self.d = d
        self.center = center
        self.n_calls = 0
        self.n_overflows = 0

    def __call__(self, x: np.ndarray) -> float:
        self.n_calls += 1
        params = _unpack(x)
        try:
            probs = forward_distribution(params, self.center).probs
        except DiffusionOverflowError:
            self.n_overflows += 1
            return _PENALTY
        return -float(np.dot(self.d, np.log(probs)))


def _search(objective: _Objective, x0: np.ndarray, max_iterations: int):
    return minimize(
        objective,
        x0=x0,
        method="Nelder-Mead",
        options={
            "maxiter": max_iterations,
            "maxfev": 2 * max_iterations,
            "xatol": 1e-7,
            "fatol": 1e-11,
            "adaptive": True,
        },
    )


def _start_points() -> List[np.ndarray]:
    return [_pack(lam0, w0) for lam0 in LAMBDA_STARTS for w0 in WEIGHT_STARTS]


def fit(
    d: LofDistribution,
    center: TonalCenter,
    max_iterations: int = 4000,
) -> TdmFit:
    """
    Maximum-likelihood TDM parameters for distribution `d` around `center`.

    Runs a Nelder-Mead search from each of the 10 fixed starts, polishes the
    best one with a fresh simplex, and keeps the highest likelihood. Fully
    deterministic.
    """
    weights = _check_distribution(d)
    objective = _Objective(weights, center)

    results = []
    for x0 in _start_points():
        res = _search(objective, x0, max_iterations)
        results.append(res)
        logger.debug("start lam0=%.3g -> nll=%.10g (%d evals)", np.exp(x0[0]), res.fun, res.nfev)

    start_lls = tuple(-float(r.fun) for r in results)
    best = min(results, key=lambda r: r.fun)  # min() keeps the first of equal values
    if best.fun >= _PENALTY:
        raise FitFailureError("Every optimizer start overflowed the diffusion window")

    polished = _search(objective, best.x, max_iterations)
    if polished.fun <= best.fun:
        best = polished

    params = _unpack(best.x)
    spread = float(np.ptp(best.final_simplex[1]))
    converged = bool(spread < CONVERGENCE_SPREAD)

    identifiable = params.lam >= IDENTIFIABLE_LAMBDA
    if not identifiable:
        params = TdmParams(lam=params.lam, weights=UNIFORM_WEIGHTS.copy())

    model = forward_distribution(params, center)
    ll = float(np.dot(weights, np.log(model.probs)))
    if not converged:
        logger.info("TDM search did not settle (simplex spread %.3g)", spread)

    return TdmFit(
        params=params,
        log_likelihood=ll,
        n_restarts_used=len(results),
        converged=converged,
        renormalized_mass=model.window_mass,
        weights_identifiable=identifiable,
        n_evaluations=objective.n_calls,
        start_log_likelihoods=start_lls,
    )


def _draw_endpoints(
    params: TdmParams, center: TonalCenter, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Draw `size` walk end points (on the unbounded lattice, window coordinates)."""
    n_steps = rng.poisson(params.lam, size=size)
    total = int(n_steps.sum())
    choices = rng.choice(6, size=total, p=params.weights)
    owners = np.repeat(np.arange(size), n_steps)
    displacement = np.bincount(owners, weights=STEP_OFFSETS[choices], minlength=size)
    return center.lof_index + displacement.astype(int)


def sample_endpoints(
    params: TdmParams,
    center: TonalCenter,
    n_tokens: int,
    seed: int,
    batch_size: int = 10_000,
) -> np.ndarray:
    """
    `n_tokens` walk end positions inside the window, in draw order.

    Walks ending outside 0..34 are rejected and redrawn, which matches the
    renormalization of forward_distribution. Deterministic given `seed`.
    """
    if n_tokens < 1:
        raise ValueError(f"n_tokens must be >= 1, got {n_tokens}")
    rng = np.random.default_rng(seed)

    first = _draw_endpoints(params, center, rng, batch_size)
    inside = first[(first >= 0) & (first < N_LOF)]
    if inside.size < 0.01 * batch_size:
        raise DiffusionOverflowError(
            f"Rejection rate {1 - inside.size / batch_size:.2%} exceeds 99% (lambda={params.lam:.4g})"
        )

    accepted = [inside]
    count = inside.size
    while count < n_tokens:
        draws = _draw_endpoints(params, center, rng, batch_size)
        kept = draws[(draws >= 0) & (draws < N_LOF)]
        accepted.append(kept)
        count += kept.size
    return np.concatenate(accepted)[:n_tokens]


def sample_distribution(
    params: TdmParams,
    center: TonalCenter,
    n_tokens: int,
    seed: int,
) -> LofDistribution:
    """Empirical distribution of `n_tokens` sampled walks."""
    ends = sample_endpoints(params, center, n_tokens, seed)
    counts = np.bincount(ends, minlength=N_LOF).astype(float)
    return LofDistribution.from_masses(counts)


def make_params(lam: float, weights: Optional[Sequence[float]] = None) -> TdmParams:
    """Convenience constructor normalizing raw non-negative weights."""
    w = UNIFORM_WEIGHTS if weights is None else np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("Interval weights need positive total mass")
    return TdmParams(lam=lam, weights=w / total)
