import numpy as np
import pytest

from tonal_coherence.analysis.filters import (
    RULE_EXCLUDED_GENRE,
    RULE_MAX_SINGLE_PC_SHARE,
    RULE_MIN_FOCUS_K3,
    RULE_MIN_UNIQUE_PCS,
    RULE_PITCH_ENTROPY,
    FilterRules,
    apply_filters,
)
from tonal_coherence.pitch.space import ChromaticDistribution


def _chroma(*values) -> ChromaticDistribution:
    w = np.zeros(12)
    w[: len(values)] = values
    return ChromaticDistribution(w)


def test_typical_piece_passes():
    assert apply_filters(_chroma(0.3, 0.2, 0.2, 0.1, 0.1, 0.1), 0.8) == []


def test_exactly_five_pcs_passes_four_fails():
    assert apply_filters(_chroma(0.2, 0.2, 0.2, 0.2, 0.2), 0.8) == []
    assert apply_filters(_chroma(0.25, 0.25, 0.25, 0.25), 0.8) == [RULE_MIN_UNIQUE_PCS]


def test_entropy_bounds_are_inclusive():
    # exactly 1.5 bits
    chroma = _chroma(0.5, 0.25, 0.25)
    relaxed = FilterRules(min_unique_pcs=3)
    assert apply_filters(chroma, 0.8, rules=relaxed) == []
    # the same value sitting on an upper bound also passes
    capped = FilterRules(min_unique_pcs=3, pitch_entropy_bits=(1.0, 1.5))
    assert apply_filters(chroma, 0.8, rules=capped) == []
    tight = FilterRules(min_unique_pcs=3, pitch_entropy_bits=(1.6, 3.2))
    assert apply_filters(chroma, 0.8, rules=tight) == [RULE_PITCH_ENTROPY]


def test_uniform_chromatic_exceeds_entropy_bound():
    chroma = ChromaticDistribution(np.full(12, 1 / 12))
    assert apply_filters(chroma, 0.8) == [RULE_PITCH_ENTROPY]


def test_single_pc_share_boundary():
    assert apply_filters(_chroma(0.5, 0.125, 0.125, 0.125, 0.125), 0.8) == []
    assert apply_filters(_chroma(0.6, 0.1, 0.1, 0.1, 0.1), 0.8) == [RULE_MAX_SINGLE_PC_SHARE]


def test_focus_boundary():
    chroma = _chroma(0.3, 0.2, 0.2, 0.1, 0.1, 0.1)
    assert apply_filters(chroma, 0.3) == []
    assert apply_filters(chroma, 0.29) == [RULE_MIN_FOCUS_K3]


def test_genre_exclusion_is_case_insensitive():
    chroma = _chroma(0.3, 0.2, 0.2, 0.1, 0.1, 0.1)
    assert apply_filters(chroma, 0.8, {"genre": "Jazz"}) == [RULE_EXCLUDED_GENRE]
    assert apply_filters(chroma, 0.8, {"genre": "New Age "}) == [RULE_EXCLUDED_GENRE]
    assert apply_filters(chroma, 0.8, {"genre": "rock"}) == []
    assert apply_filters(chroma, 0.8, {"genre": "jazz"}, FilterRules(excluded_genres=frozenset())) == []


def test_every_failed_rule_is_listed():
    failed = apply_filters(_chroma(1.0), 0.1, {"genre": "classical"})
    assert set(failed) == {
        RULE_MIN_UNIQUE_PCS,
        RULE_PITCH_ENTROPY,
        RULE_MAX_SINGLE_PC_SHARE,
        RULE_MIN_FOCUS_K3,
        RULE_EXCLUDED_GENRE,
    }


def test_inverted_entropy_bounds_rejected():
    with pytest.raises(ValueError):
        FilterRules(pitch_entropy_bits=(3.0, 2.0))
