# Ensure that the `src` directory is on sys.path when running tests.
# This allows imports like `from tonal_coherence...` to work under pytest.

import io
import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"

if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

import mido  # noqa: E402
import numpy as np  # noqa: E402

from tonal_coherence.pitch.key_estimation import TonalCenter  # noqa: E402
from tonal_coherence.pitch.space import LofDistribution, NoteEvent  # noqa: E402

MINI_CORPUS = PROJECT_ROOT / "data" / "mini_corpus"

# C major scale as unspelled chromatic notes of equal duration
SCALE_PCS = [0, 2, 4, 5, 7, 9, 11]


@pytest.fixture
def mini_corpus() -> Path:
    return MINI_CORPUS


@pytest.fixture
def c_major() -> TonalCenter:
    return TonalCenter(lof_index=17)


@pytest.fixture
def scale_notes():
    return [NoteEvent(chromatic_pc=pc, duration=1.0) for pc in SCALE_PCS]


@pytest.fixture
def scale_distribution() -> LofDistribution:
    w = np.zeros(35)
    w[16:23] = 1.0 / 7.0
    return LofDistribution(w)


@pytest.fixture
def point_mass():
    def _make(index: int = 17) -> LofDistribution:
        w = np.zeros(35)
        w[index] = 1.0
        return LofDistribution(w)

    return _make


@pytest.fixture
def make_midi():
    """
    Build Standard MIDI File bytes with mido.

    `notes` is a list of (note, beats, channel) played one after another on a
    single track; ticks_per_beat defaults to 480.
    """

    def _make(notes, ticks_per_beat: int = 480, midi_type: int = 0) -> bytes:
        mid = mido.MidiFile(type=midi_type, ticks_per_beat=ticks_per_beat)
        track = mido.MidiTrack()
        mid.tracks.append(track)
        for note, beats, channel in notes:
            track.append(mido.Message("note_on", note=note, velocity=64, channel=channel, time=0))
            track.append(
                mido.Message(
                    "note_off", note=note, velocity=0, channel=channel, time=int(beats * ticks_per_beat)
                )
            )
        track.append(mido.MetaMessage("end_of_track", time=0))
        buffer = io.BytesIO()
        mid.save(file=buffer)
        return buffer.getvalue()

    return _make
