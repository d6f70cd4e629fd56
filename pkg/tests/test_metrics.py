import math

import numpy as np
import pytest

from tonal_coherence.evaluator.metrics import (
    chromatic_focus,
    focus_profile,
    pitch_entropy_bits,
    tonal_connection,
    tonal_focus,
    weight_stats,
)
from tonal_coherence.model.tdm import TdmFit, make_params
from tonal_coherence.pitch.key_estimation import TonalCenter
from tonal_coherence.pitch.space import ChromaticDistribution, LofDistribution, collapse_to_chromatic
from tonal_coherence.utils.errors import DegenerateWeightsError, EmptyInputError


def _fit_with_lambda(lam: float, converged: bool = True) -> TdmFit:
    return TdmFit(
        params=make_params(lam),
        log_likelihood=-1.0,
        n_restarts_used=10,
        converged=converged,
        renormalized_mass=1.0,
    )


def test_focus_of_point_mass(point_mass, c_major):
    for k in (0, 1, 3, 17):
        assert tonal_focus(point_mass(17), c_major, k) == 1.0


def test_focus_of_uniform(c_major):
    d = LofDistribution(np.full(35, 1.0 / 35))
    assert tonal_focus(d, c_major, 3) == pytest.approx(0.2, abs=1e-12)


def test_focus_of_major_scale(scale_distribution, c_major):
    # E (+4) and B (+5) fall outside the k = 3 window
    assert tonal_focus(scale_distribution, c_major, 3) == pytest.approx(5 / 7, abs=1e-12)


def test_focus_window_is_clamped_at_the_edges():
    d = LofDistribution(np.full(35, 1.0 / 35))
    edge = TonalCenter(lof_index=1)
    # window [-2, 4] clamps to [0, 4]
    assert tonal_focus(d, edge, 3) == pytest.approx(5 / 35, abs=1e-12)


def test_focus_at_k_zero_is_the_center_cell(scale_distribution, c_major):
    assert tonal_focus(scale_distribution, c_major, 0) == pytest.approx(1 / 7)


def test_focus_rejects_bad_k_and_empty(scale_distribution, c_major):
    with pytest.raises(ValueError):
        tonal_focus(scale_distribution, c_major, 18)
    with pytest.raises(EmptyInputError):
        tonal_focus(LofDistribution(np.zeros(35)), c_major, 3)


def test_focus_is_monotone_in_k_and_full_at_17():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        d = LofDistribution.from_masses(rng.random(35) ** 3)
        center = TonalCenter(lof_index=int(rng.integers(0, 35)))
        profile = focus_profile(d, center, range(0, 18))
        values = [profile[k] for k in profile.ks]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
        if center.lof_index == 17:
            assert profile[17] == pytest.approx(1.0, abs=1e-12)


def test_focus_profile_keys(scale_distribution, c_major):
    profile = focus_profile(scale_distribution, c_major, range(2, 8))
    assert profile.ks == [2, 3, 4, 5, 6, 7]
    assert profile[7] == pytest.approx(1.0)


def test_tonal_connection_projects_lambda():
    assert tonal_connection(_fit_with_lambda(0.0)).value == 0.0
    assert tonal_connection(_fit_with_lambda(3.7)).value == 3.7


def test_tonal_connection_carries_convergence_flag():
    estimate = tonal_connection(_fit_with_lambda(1.5, converged=False))
    assert estimate.value == 1.5
    assert not estimate.converged


def test_weight_stats_uniform():
    ws = weight_stats([1 / 6] * 6)
    assert ws.fifth_dominance == pytest.approx(1 / 3, abs=1e-12)
    assert ws.weight_entropy == pytest.approx(math.log(6), abs=1e-12)
    assert ws.weight_kurtosis is None
    assert not ws.kurtosis_defined


def test_weight_stats_two_point():
    ws = weight_stats([0, 0, 0.5, 0.5, 0, 0])
    assert ws.fifth_dominance == pytest.approx(1.0)
    assert ws.weight_entropy == pytest.approx(math.log(2), abs=1e-12)


def test_weight_kurtosis_matches_moments():
    w = np.array([0.5, 0.1, 0.1, 0.1, 0.1, 0.1])
    ws = weight_stats(w)
    m = w.mean()
    m2 = np.mean((w - m) ** 2)
    m4 = np.mean((w - m) ** 4)
    assert ws.weight_kurtosis == pytest.approx(m4 / m2 ** 2 - 3, abs=1e-9)
    assert ws.weight_kurtosis == pytest.approx(1.2, abs=1e-9)


def test_weight_stats_invariances():
    w = np.array([0.05, 0.1, 0.3, 0.4, 0.1, 0.05])
    a = weight_stats(w)
    b = weight_stats(w * 7.5)
    assert a.fifth_dominance == pytest.approx(b.fifth_dominance, abs=1e-12)
    # Fisher kurtosis ignores shift and scale of the six values
    c = weight_stats(w * 3 + 0.2)
    assert a.weight_kurtosis == pytest.approx(c.weight_kurtosis, abs=1e-9)


def test_weight_entropy_is_zero_for_one_hot():
    assert weight_stats([0, 0, 0, 1, 0, 0]).weight_entropy == 0.0


def test_weight_stats_rejects_zero_vector():
    with pytest.raises(DegenerateWeightsError):
        weight_stats([0] * 6)
    with pytest.raises(ValueError):
        weight_stats([0.5, 0.5])


def test_chromatic_focus_examples(scale_distribution):
    cd_point = ChromaticDistribution(np.eye(12)[4])
    assert chromatic_focus(cd_point, 4, 2) == 1.0
    assert chromatic_focus(ChromaticDistribution(np.full(12, 1 / 12)), 0, 3) == pytest.approx(7 / 12)
    collapsed = collapse_to_chromatic(scale_distribution)
    assert chromatic_focus(collapsed, 0, 3) == pytest.approx(5 / 7)


def test_chromatic_focus_bounds_k():
    with pytest.raises(ValueError):
        chromatic_focus(ChromaticDistribution(np.full(12, 1 / 12)), 0, 7)


def test_chromatic_focus_dominates_when_no_enharmonic_split():
    rng = np.random.default_rng(3)
    center = TonalCenter(lof_index=17)
    for _ in range(200):
        # mass only on 11..22: one spelling per pitch class
        masses = np.zeros(35)
        masses[11:23] = rng.random(12)
        d = LofDistribution.from_masses(masses)
        for k in range(0, 7):
            assert chromatic_focus(collapse_to_chromatic(d), 0, k) >= tonal_focus(d, center, k) - 1e-12


def test_pitch_entropy_bits():
    assert pitch_entropy_bits(ChromaticDistribution(np.full(12, 1 / 12))) == pytest.approx(math.log2(12))
    assert pitch_entropy_bits(ChromaticDistribution(np.eye(12)[0])) == 0.0
