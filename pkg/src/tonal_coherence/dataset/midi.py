"""
Standard MIDI File ingestion.

The chunk layout is validated here (so malformed files are reported with a
byte offset); event decoding is left to mido. Note-on/note-off pairs become
NoteEvents with durations in beats (ticks / division). Channel 10 (index 9)
is flagged as percussion. Overlapping note-ons on the same channel and key are
closed first-in, first-out.
"""

from __future__ import annotations

import io
import logging
import struct
from collections import defaultdict, deque
from pathlib import Path
from typing import BinaryIO, Deque, Dict, List, Optional, Tuple, Union

import mido

from tonal_coherence.dataset.records import PieceRecord
from tonal_coherence.pitch.space import NoteEvent
from tonal_coherence.utils.errors import MidiParseError

logger = logging.getLogger(__name__)

PERCUSSION_CHANNEL = 9
HEADER_LENGTH = 6


def validate_chunks(data: bytes) -> Tuple[int, int, int]:
    """
    Check the MThd header and the chunk framing of every track.

    Returns (format, n_tracks, division). Raises MidiParseError with the byte
    offset of the first problem found.
    """
    if len(data) < 14:
        raise MidiParseError("File too short for a MIDI header", offset=0)
    if data[0:4] != b"MThd":
        raise MidiParseError("Missing MThd header chunk", offset=0)
    (length,) = struct.unpack(">I", data[4:8])
    if length < HEADER_LENGTH:
        raise MidiParseError(f"Header chunk length {length} < 6", offset=4)
    fmt, n_tracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MidiParseError(f"Unsupported MIDI format {fmt}", offset=8)
    if division & 0x8000:
        raise MidiParseError("SMPTE time division is not supported", offset=12)
    if division == 0:
        raise MidiParseError("Time division of zero ticks per beat", offset=12)

    offset = 8 + length
    found = 0
    while offset < len(data) and found < n_tracks:
        if offset + 8 > len(data):
            raise MidiParseError("Truncated chunk header", offset=offset)
        chunk_id = data[offset:offset + 4]
        (chunk_len,) = struct.unpack(">I", data[offset + 4:offset + 8])
        if offset + 8 + chunk_len > len(data):
            raise MidiParseError(
                f"Chunk {chunk_id!r} declares {chunk_len} bytes past end of file", offset=offset
            )
        if chunk_id == b"MTrk":
            found += 1
        offset += 8 + chunk_len
    if found < n_tracks:
        raise MidiParseError(f"Header declares {n_tracks} tracks, found {found}", offset=offset)
    return fmt, n_tracks, division


def _read_bytes(source: Union[bytes, BinaryIO, str, Path]) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def extract_note_events(mid: mido.MidiFile) -> Tuple[List[NoteEvent], int]:
    """
    Pair note-ons with note-offs track by track.

    Returns the notes ordered by (onset tick, track, channel, key) and the
    number of dropped events (unmatched offs, unclosed or zero-length notes).
    """
    division = mid.ticks_per_beat
    collected: List[Tuple[int, int, int, int, NoteEvent]] = []
    dropped = 0

    for track_no, track in enumerate(mid.tracks):
        tick = 0
        open_notes: Dict[Tuple[int, int], Deque[int]] = defaultdict(deque)
        for msg in track:
            tick += msg.time
            if msg.type == "note_on" and msg.velocity > 0:
                open_notes[(msg.channel, msg.note)].append(tick)
            elif msg.type == "note_off" or (msg.type == "note_on" and msg.velocity == 0):
                pending = open_notes.get((msg.channel, msg.note))
                if not pending:
                    dropped += 1
                    continue
                onset = pending.popleft()
                ticks = tick - onset
                if ticks <= 0:
                    dropped += 1
                    continue
                event = NoteEvent(
                    chromatic_pc=msg.note % 12,
                    duration=ticks / division,
                    is_percussion=msg.channel == PERCUSSION_CHANNEL,
                )
                collected.append((onset, track_no, msg.channel, msg.note, event))
        dropped += sum(len(q) for q in open_notes.values())

    collected.sort(key=lambda row: row[:4])
    return [row[4] for row in collected], dropped


def ingest_midi(
    source: Union[bytes, BinaryIO, str, Path],
    piece_id: str,
    metadata: Optional[Dict[str, str]] = None,
    group: str = "",
) -> PieceRecord:
    """Read a format 0/1 Standard MIDI File into a PieceRecord (no spellings assigned)."""
    data = _read_bytes(source)
    validate_chunks(data)
    try:
        mid = mido.MidiFile(file=io.BytesIO(data))
    except (EOFError, OSError, ValueError, KeyError, IndexError) as e:
        raise MidiParseError(f"Malformed track event data: {e}") from e

    notes, dropped = extract_note_events(mid)
    record = PieceRecord(
        id=piece_id,
        group=group,
        metadata=dict(metadata or {}),
        notes=notes,
    )
    if dropped:
        msg = f"{dropped} unmatched or zero-length note events dropped"
        record.warnings.append(msg)
        logger.warning("%s: %s", piece_id, msg)
    if not notes:
        logger.info("%s: no notes found", piece_id)
    return record
