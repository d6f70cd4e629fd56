"""
Line-of-fifths pitch space.

Spelled pitch classes live on a 35-position line ordered by perfect fifths,
index 17 = C, 16 = F, 18 = G. This module converts between that line and the
12 chromatic pitch classes and builds duration-weighted distributions over it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from tonal_coherence.utils.errors import EmptyInputError, LofRangeError

N_LOF = 35
N_CHROMA = 12
C_INDEX = 17
MIN_INDEX = 0
MAX_INDEX = N_LOF - 1

SUM_TOLERANCE = 1e-9

_LETTERS_BY_FIFTH = "FCGDAEB"


def _check_lof_index(i: int) -> int:
    if isinstance(i, bool) or int(i) != i:
        raise LofRangeError(f"Line-of-fifths index must be an integer, got {i!r}")
    i = int(i)
    if not MIN_INDEX <= i <= MAX_INDEX:
        raise LofRangeError(f"Line-of-fifths index {i} outside 0..{MAX_INDEX}")
    return i


def _check_pc(pc: int) -> int:
    if isinstance(pc, bool) or int(pc) != pc:
        raise LofRangeError(f"Pitch class must be an integer, got {pc!r}")
    pc = int(pc)
    if not 0 <= pc < N_CHROMA:
        raise LofRangeError(f"Pitch class {pc} outside 0..11")
    return pc


@dataclass(frozen=True)
class NoteEvent:
    """One sounding note, already reduced to pitch class and duration."""
    chromatic_pc: int
    duration: float
    spelled_lof: Optional[int] = None
    is_percussion: bool = False

    def __post_init__(self) -> None:
        _check_pc(self.chromatic_pc)
        if not self.duration > 0:
            raise ValueError(f"Note duration must be positive, got {self.duration!r}")
        if self.spelled_lof is not None:
            _check_lof_index(self.spelled_lof)
            if lof_to_chromatic(self.spelled_lof) != self.chromatic_pc:
                raise ValueError(
                    f"Spelling {self.spelled_lof} does not sound as pitch class {self.chromatic_pc}"
                )


@dataclass(frozen=True)
class LofDistribution:
    """Proportions of sounding duration over the 35 line-of-fifths positions."""
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (N_LOF,):
            raise ValueError(f"LofDistribution needs {N_LOF} entries, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("LofDistribution entries must be finite and non-negative")
        total = w.sum()
        if total != 0 and abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"LofDistribution must sum to 1 (got {total!r})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_masses(cls, masses: Iterable[float]) -> "LofDistribution":
        """Normalize raw (non-negative) masses into a distribution."""
        m = np.asarray(list(masses), dtype=float)
        total = m.sum()
        if total <= 0:
            raise EmptyInputError("Cannot normalize a distribution with zero total mass")
        return cls(m / total)

    @property
    def is_empty(self) -> bool:
        return bool(self.weights.sum() == 0)


@dataclass(frozen=True)
class ChromaticDistribution:
    """Proportions of sounding duration over chromatic pitch classes (0 = C)."""
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (N_CHROMA,):
            raise ValueError(f"ChromaticDistribution needs 12 entries, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("ChromaticDistribution entries must be finite and non-negative")
        total = w.sum()
        if total != 0 and abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"ChromaticDistribution must sum to 1 (got {total!r})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_masses(cls, masses: Iterable[float]) -> "ChromaticDistribution":
        m = np.asarray(list(masses), dtype=float)
        total = m.sum()
        if total <= 0:
            raise EmptyInputError("Cannot normalize a distribution with zero total mass")
        return cls(m / total)

    @property
    def is_empty(self) -> bool:
        return bool(self.weights.sum() == 0)


def lof_to_chromatic(i: int) -> int:
    """Chromatic pitch class (0 = C) sounded by line-of-fifths index i."""
    i = _check_lof_index(i)
    return ((i - C_INDEX) * 7) % N_CHROMA


# Precomputed lookup used by the vectorized helpers below.
LOF_TO_PC = np.array([((i - C_INDEX) * 7) % N_CHROMA for i in range(N_LOF)], dtype=int)


def spell_chromatic(pc: int, center: int) -> int:
    """
    Spell pitch class `pc` as the line-of-fifths index nearest to `center`.

    Exact distance ties go to the sharp side (larger index).
    """
    pc = _check_pc(pc)
    center = _check_lof_index(center)
    candidates = np.flatnonzero(LOF_TO_PC == pc)
    distances = np.abs(candidates - center)
    best = distances.min()
    # candidates are ascending, so the last tied one is the sharp-side choice
    return int(candidates[distances == best][-1])


def lof_name(i: int) -> str:
    """Spelled note name for an index, e.g. 17 -> 'C', 23 -> 'F#', 11 -> 'Gb'."""
    i = _check_lof_index(i)
    shifted = i - C_INDEX + 1  # F sits at 0 in _LETTERS_BY_FIFTH
    letter = _LETTERS_BY_FIFTH[shifted % 7]
    accidentals = shifted // 7
    if accidentals > 0:
        return letter + "#" * accidentals
    return letter + "b" * (-accidentals)


def build_lof_distribution(notes: List[NoteEvent], center: int) -> LofDistribution:
    """
    Duration-weighted line-of-fifths distribution of a piece.

    Percussion events are dropped. Events with a spelling keep it; the rest are
    spelled relative to `center`.
    """
    center = _check_lof_index(center)
    masses = np.zeros(N_LOF, dtype=float)
    for note in notes:
        if note.is_percussion:
            continue
        idx = note.spelled_lof if note.spelled_lof is not None else spell_chromatic(
            note.chromatic_pc, center
        )
        masses[idx] += note.duration

    if masses.sum() <= 0:
        raise EmptyInputError("No non-percussion notes with positive duration")
    return LofDistribution.from_masses(masses)


def build_chromatic_distribution(notes: List[NoteEvent]) -> ChromaticDistribution:
    """Duration-weighted chromatic profile of the non-percussion notes."""
    masses = np.zeros(N_CHROMA, dtype=float)
    for note in notes:
        if not note.is_percussion:
            masses[note.chromatic_pc] += note.duration
    if masses.sum() <= 0:
        raise EmptyInputError("No non-percussion notes with positive duration")
    return ChromaticDistribution.from_masses(masses)


def collapse_to_chromatic(d: LofDistribution) -> ChromaticDistribution:
    """Merge enharmonic spellings: sum line-of-fifths mass per chromatic class."""
    collapsed = np.bincount(LOF_TO_PC, weights=d.weights, minlength=N_CHROMA)
    return ChromaticDistribution(collapsed)
