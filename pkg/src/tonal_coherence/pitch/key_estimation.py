"""
Global key estimation (Krumhansl-Schmuckler) and key-label handling.

The chromatic profile of a piece is correlated with the 24 rotated major and
minor reference profiles; the best match becomes the tonal center, expressed
as a line-of-fifths index inside the band 11..22 (Gb..B) where every
chromatic tonic has exactly one spelling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np
from scipy.linalg import circulant

from tonal_coherence.pitch.key_profiles import KRUMHANSL_MAJOR, KRUMHANSL_MINOR
from tonal_coherence.pitch.space import (
    C_INDEX,
    ChromaticDistribution,
    _check_lof_index,
    _check_pc,
    lof_name,
    lof_to_chromatic,
)
from tonal_coherence.utils.errors import (
    DegenerateProfileError,
    EmptyInputError,
    LofRangeError,
)

Mode = Literal["major", "minor"]
KeySource = Literal["annotated", "estimated"]

ESTIMATED_BAND = (11, 22)
MODES: Tuple[Mode, Mode] = ("major", "minor")


@dataclass(frozen=True)
class TonalCenter:
    """Tonic position on the line of fifths plus mode."""
    lof_index: int
    mode: Mode = "major"
    source: KeySource = "annotated"

    def __post_init__(self) -> None:
        _check_lof_index(self.lof_index)
        if self.mode not in MODES:
            raise ValueError(f"Unknown mode: {self.mode!r}")
        if self.source == "estimated":
            lo, hi = ESTIMATED_BAND
            if not lo <= self.lof_index <= hi:
                raise LofRangeError(
                    f"Estimated tonic {self.lof_index} outside band {lo}..{hi}"
                )

    @property
    def tonic_pc(self) -> int:
        return lof_to_chromatic(self.lof_index)

    @property
    def label(self) -> str:
        """DCML-style label: uppercase for major, lowercase for minor."""
        name = lof_name(self.lof_index)
        if self.mode == "minor":
            return name[0].lower() + name[1:]
        return name


@dataclass(frozen=True)
class KeyScore:
    tonic_pc: int
    mode: Mode
    r: float


@dataclass(frozen=True)
class KeyEstimate:
    center: TonalCenter
    correlation: float
    all_scores: List[KeyScore]


def _rotation_matrix(profile: np.ndarray) -> np.ndarray:
    # row t is the profile rotated so its tonic sits on pitch class t
    return circulant(np.asarray(profile, dtype=float)).T


# 24 reference rows: majors on tonics 0..11, then minors on tonics 0..11.
REFERENCE_MATRIX = np.vstack(
    (_rotation_matrix(KRUMHANSL_MAJOR), _rotation_matrix(KRUMHANSL_MINOR))
)
REFERENCE_MATRIX.setflags(write=False)


def tonic_pc_to_lof(pc: int, mode: Mode = "major") -> int:
    """The unique spelling of tonic `pc` inside the band 11..22."""
    pc = _check_pc(pc)
    if mode not in MODES:
        raise ValueError(f"Unknown mode: {mode!r}")
    # 7 is its own inverse mod 12, so pc * 7 gives the fifth count
    fifths = ((pc * 7 + 6) % 12) - 6
    return C_INDEX + fifths


def estimate_key(profile: ChromaticDistribution) -> KeyEstimate:
    """
    Krumhansl-Schmuckler estimate of the global key.

    Ties go to major before minor, then to the lower tonic pitch class.
    """
    x = np.asarray(profile.weights, dtype=float)
    if x.sum() <= 0:
        raise EmptyInputError("Cannot estimate a key from an empty profile")
    if np.ptp(x) == 0:
        raise DegenerateProfileError("Constant profile: Pearson correlation undefined")

    xc = x - x.mean()
    refs = REFERENCE_MATRIX - REFERENCE_MATRIX.mean(axis=1, keepdims=True)
    r = refs @ xc / (np.linalg.norm(refs, axis=1) * np.linalg.norm(xc))
    r = np.clip(r, -1.0, 1.0)

    scores = [
        KeyScore(tonic_pc=row % 12, mode=MODES[row // 12], r=float(r[row]))
        for row in range(24)
    ]
    best = int(np.argmax(r))  # first maximum -> majors first, lower pc first
    tonic_pc = best % 12
    mode = MODES[best // 12]
    center = TonalCenter(
        lof_index=tonic_pc_to_lof(tonic_pc, mode),
        mode=mode,
        source="estimated",
    )
    return KeyEstimate(center=center, correlation=float(r[best]), all_scores=scores)


_LETTER_FIFTHS = {"F": -1, "C": 0, "G": 1, "D": 2, "A": 3, "E": 4, "B": 5}
_KEY_RE = re.compile(
    r"^\s*(?P<letter>[A-Ga-g])(?P<acc>(?:#|b|♯|♭)*)\s*(?P<mode>major|minor|maj|min|m|M)?\s*$"
)


def parse_key_label(label: str) -> TonalCenter:
    """
    Parse a key label into an annotated TonalCenter.

    Accepted: 'C', 'F#', 'Bb', 'eb' (lowercase = minor), 'A minor', 'Dm', 'Ebmaj'.
    """
    m = _KEY_RE.match(label or "")
    if not m:
        raise ValueError(f"Unrecognized key label: {label!r}")
    letter = m.group("letter")
    acc = m.group("acc") or ""
    sharps = acc.count("#") + acc.count("♯")
    flats = acc.count("b") + acc.count("♭")
    fifths = _LETTER_FIFTHS[letter.upper()] + 7 * (sharps - flats)
    index = C_INDEX + fifths
    if not 0 <= index <= 34:
        raise LofRangeError(f"Key {label!r} falls outside the line-of-fifths window")

    suffix = m.group("mode")
    if suffix in ("minor", "min", "m"):
        mode: Mode = "minor"
    elif suffix in ("major", "maj", "M"):
        mode = "major"
    else:
        mode = "minor" if letter.islower() else "major"
    return TonalCenter(lof_index=index, mode=mode, source="annotated")
