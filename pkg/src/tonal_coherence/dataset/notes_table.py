"""
Tab-separated note tables with explicit pitch spellings.

Header columns:
    piece_id   - piece identifier (several pieces may share one file)
    tpc        - absolute line-of-fifths index 0..34 (C = 17)
      or
    fifths     - fifths from C, -17..17 (C = 0)
    duration   - positive real, any consistent unit
    global_key - optional key label (e.g. 'C', 'f#'); same value for every row of a piece
"""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO, Tuple, Union

from tonal_coherence.dataset.records import PieceRecord
from tonal_coherence.pitch.key_estimation import TonalCenter, parse_key_label
from tonal_coherence.pitch.space import C_INDEX, MAX_INDEX, NoteEvent, lof_to_chromatic
from tonal_coherence.utils.errors import NotesTableError

logger = logging.getLogger(__name__)

ABSOLUTE_COLUMN = "tpc"
RELATIVE_COLUMN = "fifths"


def _open_text(source: Union[str, Path, TextIO]) -> Tuple[TextIO, bool]:
    if isinstance(source, (str, Path)):
        return Path(source).open("r", encoding="utf-8", newline=""), True
    return source, False


def _parse_header(fieldnames: Optional[List[str]]) -> str:
    if not fieldnames:
        raise NotesTableError("Missing header row", line=1)
    names = set(fieldnames)
    for required in ("piece_id", "duration"):
        if required not in names:
            raise NotesTableError(f"Header lacks required column '{required}'", line=1)
    has_abs = ABSOLUTE_COLUMN in names
    has_rel = RELATIVE_COLUMN in names
    if has_abs == has_rel:
        raise NotesTableError(
            f"Header must contain exactly one of '{ABSOLUTE_COLUMN}' or '{RELATIVE_COLUMN}'",
            line=1,
        )
    return ABSOLUTE_COLUMN if has_abs else RELATIVE_COLUMN


def _parse_tpc(raw: str, column: str, line: int) -> int:
    try:
        value = int(raw.strip())
    except (AttributeError, ValueError):
        raise NotesTableError(f"{column} value {raw!r} is not an integer", line=line)
    index = value if column == ABSOLUTE_COLUMN else value + C_INDEX
    if not 0 <= index <= MAX_INDEX:
        raise NotesTableError(f"{column} value {value} outside the line-of-fifths window", line=line)
    return index


def _parse_duration(raw: Optional[str], line: int) -> float:
    if raw is None or not raw.strip():
        raise NotesTableError("Missing duration", line=line)
    try:
        value = float(raw)
    except ValueError:
        raise NotesTableError(f"Duration {raw!r} is not a number", line=line)
    if not value > 0:
        raise NotesTableError(f"Duration must be positive, got {value}", line=line)
    return value


def ingest_notes_table(source: Union[str, Path, TextIO]) -> Dict[str, PieceRecord]:
    """
    Parse a notes table into PieceRecords keyed by piece_id (file order kept).

    Rows carry explicit spellings; a global_key column populates annotated_key.
    """
    handle, owned = _open_text(source)
    try:
        reader = csv.DictReader(handle, delimiter="\t")
        column = _parse_header(reader.fieldnames)
        pieces: Dict[str, PieceRecord] = {}
        keys: Dict[str, str] = {}

        for row in reader:
            line = reader.line_num
            piece_id = (row.get("piece_id") or "").strip()
            if not piece_id:
                raise NotesTableError("Empty piece_id", line=line)
            index = _parse_tpc(row.get(column), column, line)
            duration = _parse_duration(row.get("duration"), line)

            record = pieces.get(piece_id)
            if record is None:
                record = PieceRecord(id=piece_id)
                pieces[piece_id] = record

            key_label = (row.get("global_key") or "").strip()
            if key_label:
                previous = keys.get(piece_id)
                if previous is not None and previous != key_label:
                    raise NotesTableError(
                        f"Conflicting global_key {key_label!r} vs {previous!r} for {piece_id}",
                        line=line,
                    )
                if previous is None:
                    try:
                        record.annotated_key = parse_key_label(key_label)
                    except ValueError as e:
                        raise NotesTableError(str(e), line=line) from e
                    keys[piece_id] = key_label

            record.notes.append(
                NoteEvent(
                    chromatic_pc=lof_to_chromatic(index),
                    duration=duration,
                    spelled_lof=index,
                )
            )
    finally:
        if owned:
            handle.close()

    logger.debug("Read %d piece(s) from notes table", len(pieces))
    return pieces


def write_notes_table(
    target: Union[str, Path, TextIO],
    piece_id: str,
    positions: Iterable[int],
    durations: Optional[Iterable[float]] = None,
    center: Optional[TonalCenter] = None,
) -> None:
    """Write one piece as an absolute-tpc notes table (readable by ingest_notes_table)."""
    positions = list(positions)
    durations = [1.0] * len(positions) if durations is None else list(durations)
    key_label = center.label if center is not None else ""

    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    writer.writerow(["piece_id", ABSOLUTE_COLUMN, "duration", "global_key"])
    for pos, dur in zip(positions, durations):
        writer.writerow([piece_id, int(pos), f"{float(dur):.6g}", key_label])

    if isinstance(target, (str, Path)):
        with Path(target).open("w", encoding="utf-8", newline="") as f:
            f.write(buffer.getvalue())
    else:
        target.write(buffer.getvalue())
