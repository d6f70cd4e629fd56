import numpy as np
import pytest

from tonal_coherence.analysis.filters import FilterRules
from tonal_coherence.analysis.pipeline import (
    CHROMATIC_EXPLORATION,
    TEXTURAL_DIATONICISM,
    analyze_piece,
    classify_archetypes,
)
from tonal_coherence.analysis.stats import corpus_stats
from tonal_coherence.dataset.generator import (
    A_FOCUS_RANGE,
    A_LAMBDA_RANGE,
    A_THIRD_SHARE,
    B_FOCUS_RANGE,
    B_LAMBDA_RANGE,
    GROUP_A,
    GROUP_B,
    SyntheticSpec,
    decorrelated_targets,
    expected_focus,
    fifth_heavy_weights,
    group_specs,
    positions_to_notes,
    solve_weights,
    synthetic_piece,
    tilted_weights,
    two_group_corpus,
)
from tonal_coherence.model.tdm import make_params
from tonal_coherence.pitch.key_estimation import TonalCenter

# synthetic pieces are not real songs; only the measurement chain is under test
OPEN_RULES = FilterRules(
    min_unique_pcs=1,
    pitch_entropy_bits=(0.0, 4.0),
    max_single_pc_share=1.0,
    min_focus_k3=0.0,
    excluded_genres=frozenset(),
)


def test_fifth_heavy_weights_sum_to_one():
    w = fifth_heavy_weights(0.2)
    assert w.sum() == pytest.approx(1.0)
    assert w[2] == w[3] == pytest.approx(0.4)
    with pytest.raises(ValueError):
        fifth_heavy_weights(1.5)


def test_positions_to_notes_aggregates_counts():
    notes = positions_to_notes(np.array([17, 17, 18, 12]))
    assert [(n.spelled_lof, n.duration) for n in notes] == [(12, 1.0), (17, 2.0), (18, 1.0)]
    assert notes[0].chromatic_pc == 1


def test_tilted_weights_span_flat_to_single_interval():
    assert tilted_weights(0.0) == pytest.approx(np.full(6, 1 / 6))
    assert tilted_weights(1.0) == pytest.approx(np.array([0, 0, 0.5, 0.5, 0, 0]))
    assert tilted_weights(-1.0) == pytest.approx(np.array([0.5, 0, 0, 0, 0, 0.5]))
    assert tilted_weights(0.3).sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tilted_weights(1.5)


def test_zero_rate_piece_stays_on_the_center():
    spec = SyntheticSpec(make_params(0.0), TonalCenter(lof_index=20), focus_target=1.0)
    piece = synthetic_piece("x", spec, n_tokens=100, seed=1)
    assert [(n.spelled_lof, n.duration) for n in piece.notes] == [(20, 100.0)]
    assert piece.annotated_key.lof_index == 20
    assert piece.metadata == {"lambda": "0", "focus_target": "1"}


def test_solve_weights_reaches_the_focus_target(c_major):
    weights, reached = solve_weights(2.2, c_major, 0.7, fifth_heavy_weights, A_THIRD_SHARE)
    assert reached == pytest.approx(0.7, abs=1e-6)
    assert expected_focus(make_params(2.2, weights), c_major) == pytest.approx(0.7, abs=1e-6)


def test_solve_weights_falls_back_to_the_nearer_end(c_major):
    weights, reached = solve_weights(2.2, c_major, 0.999, fifth_heavy_weights, A_THIRD_SHARE)
    assert weights == pytest.approx(fifth_heavy_weights(A_THIRD_SHARE[0]))
    assert reached < 0.999


def test_decorrelated_targets_have_zero_sample_correlation():
    rng = np.random.default_rng(3)
    lams = rng.normal(1.2, 0.8, size=30)
    targets = decorrelated_targets(rng, lams, (0.84, 0.96))
    assert targets.min() == pytest.approx(0.84)
    assert targets.max() == pytest.approx(0.96)
    assert np.corrcoef(lams, targets)[0, 1] == pytest.approx(0.0, abs=1e-9)
    assert decorrelated_targets(rng, np.array([1.0]), (0.5, 0.7)) == pytest.approx(np.array([0.6]))


@pytest.mark.parametrize("group", [GROUP_A, GROUP_B])
def test_group_specs_hit_their_focus_targets(group):
    ranges = {GROUP_A: (A_LAMBDA_RANGE, A_FOCUS_RANGE), GROUP_B: (B_LAMBDA_RANGE, B_FOCUS_RANGE)}
    (lam_lo, lam_hi), (f_lo, f_hi) = ranges[group]
    for spec in group_specs(group, 6, np.random.default_rng(8)):
        assert lam_lo <= spec.params.lam <= lam_hi
        assert f_lo - 1e-9 <= spec.focus_target <= f_hi + 1e-9
        assert expected_focus(spec.params, spec.center) == pytest.approx(spec.focus_target, abs=1e-6)


def test_two_group_corpus_is_deterministic():
    a = two_group_corpus(n_per_group=3, seed=11, n_tokens=300)
    b = two_group_corpus(n_per_group=3, seed=11, n_tokens=300)
    assert [p.id for p in a] == ["A000", "A001", "A002", "B000", "B001", "B002"]
    assert [p.group for p in a] == [GROUP_A] * 3 + [GROUP_B] * 3
    for x, y in zip(a, b):
        assert x.notes == y.notes
        assert x.annotated_key == y.annotated_key
    assert all(11 <= p.annotated_key.lof_index <= 22 for p in a)
    assert all(sum(n.duration for n in p.notes) == 300 for p in a)


def _cohens_d(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    pooled = ((len(x) - 1) * x.var(ddof=1) + (len(y) - 1) * y.var(ddof=1)) / (len(x) + len(y) - 2)
    return (x.mean() - y.mean()) / np.sqrt(pooled)


def test_effect_sizes_match_a_direct_computation():
    pieces = two_group_corpus(n_per_group=10, seed=4, n_tokens=800)
    analyses = [analyze_piece(p, rules=OPEN_RULES) for p in pieces]
    stats = corpus_stats(analyses)
    sizes = {e.metric: e.d for e in stats.effect_sizes}

    focus = {g: [a.focus_k3 for a in analyses if a.group == g] for g in (GROUP_A, GROUP_B)}
    connection = {g: [a.connection for a in analyses if a.group == g] for g in (GROUP_A, GROUP_B)}
    assert sizes["focus_k3"] == pytest.approx(_cohens_d(focus[GROUP_A], focus[GROUP_B]), rel=1e-9)
    assert sizes["connection"] == pytest.approx(_cohens_d(connection[GROUP_A], connection[GROUP_B]), rel=1e-9)

    r = {(c.group, c.k): c.r for c in stats.correlations}
    expected = np.corrcoef(focus[GROUP_B], connection[GROUP_B])[0, 1]
    assert r[(GROUP_B, 3)] == pytest.approx(expected, abs=1e-9)


@pytest.mark.slow
def test_two_group_structure_is_recovered():
    pieces = two_group_corpus(n_per_group=25, seed=0)
    analyses = classify_archetypes([analyze_piece(p, rules=OPEN_RULES) for p in pieces])
    stats = corpus_stats(analyses)
    sizes = {e.metric: e.d for e in stats.effect_sizes if (e.group_a, e.group_b) == (GROUP_A, GROUP_B)}

    assert sizes["connection"] > 0
    assert sizes["focus_k3"] < 0

    # focus and connection are independent dimensions within each group
    r = {(c.group, c.k): c.r for c in stats.correlations}
    assert abs(r[(GROUP_A, 3)]) < 0.3
    assert abs(r[(GROUP_B, 3)]) < 0.3

    expected = {GROUP_A: CHROMATIC_EXPLORATION, GROUP_B: TEXTURAL_DIATONICISM}
    for group in (GROUP_A, GROUP_B):
        members = [a for a in analyses if a.group == group]
        correct = sum(a.archetype == expected[group] for a in members)
        assert correct / len(members) >= 0.9, group
