"""
Corpus manifests and piece loading.

A manifest is a tab-separated file with columns `id`, `path` (relative to the
manifest's directory), `group`, an optional `key` (annotated global key) and
any further metadata columns (composer, era, year, genre, ...).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from tonal_coherence.dataset.midi import ingest_midi
from tonal_coherence.dataset.notes_table import ingest_notes_table
from tonal_coherence.dataset.records import PieceRecord
from tonal_coherence.pitch.key_estimation import parse_key_label
from tonal_coherence.utils.errors import NotesTableError, UnsupportedFormatError

logger = logging.getLogger(__name__)

MIDI_EXTENSIONS = {".mid", ".midi"}
TABLE_EXTENSIONS = {".tsv", ".txt", ".notes"}
RESERVED_COLUMNS = {"id", "path", "group", "key"}


@dataclass
class ManifestEntry:
    id: str
    path: Path
    group: str = ""
    key: str = ""
    metadata: Dict[str, str] = field(default_factory=dict)


def load_manifest(path: str | Path) -> List[ManifestEntry]:
    """Read a manifest; paths are resolved against the manifest's directory."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Manifest not found: {p}")

    entries: List[ManifestEntry] = []
    seen = set()
    with p.open("r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter="\t")
        if not reader.fieldnames or not {"id", "path"} <= set(reader.fieldnames):
            raise NotesTableError("Manifest header needs 'id' and 'path' columns", line=1)
        for row in reader:
            piece_id = (row.get("id") or "").strip()
            if not piece_id:
                raise NotesTableError("Empty id", line=reader.line_num)
            if piece_id in seen:
                raise NotesTableError(f"Duplicate id {piece_id!r}", line=reader.line_num)
            seen.add(piece_id)
            metadata = {
                k: (v or "").strip()
                for k, v in row.items()
                if k is not None and k not in RESERVED_COLUMNS
            }
            entries.append(
                ManifestEntry(
                    id=piece_id,
                    path=(p.parent / (row.get("path") or "").strip()),
                    group=(row.get("group") or "").strip(),
                    key=(row.get("key") or "").strip(),
                    metadata=metadata,
                )
            )
    return entries


def load_piece_file(path: str | Path, piece_id: Optional[str] = None) -> PieceRecord:
    """
    Load one piece from a MIDI file or a notes table, chosen by extension.

    For tables holding several pieces, `piece_id` selects one; otherwise the
    table must contain exactly one piece.
    """
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix in MIDI_EXTENSIONS:
        return ingest_midi(p, piece_id or p.stem)
    if suffix in TABLE_EXTENSIONS:
        pieces = ingest_notes_table(p)
        if piece_id is not None and piece_id in pieces:
            return pieces[piece_id]
        if len(pieces) == 1:
            record = next(iter(pieces.values()))
            if piece_id is not None:
                record.id = piece_id
            return record
        if not pieces:
            return PieceRecord(id=piece_id or p.stem)
        raise NotesTableError(
            f"{p.name} holds {len(pieces)} pieces; none is named {piece_id!r}"
        )
    raise UnsupportedFormatError(f"Unsupported file extension {suffix!r} for {p.name}")


def load_entry(entry: ManifestEntry) -> PieceRecord:
    """Load the piece behind a manifest row and attach group, metadata and key."""
    if not entry.path.exists():
        raise FileNotFoundError(f"Piece file not found: {entry.path}")
    record = load_piece_file(entry.path, entry.id)
    record.id = entry.id
    record.group = entry.group
    record.metadata = {**record.metadata, **entry.metadata}
    if entry.key:
        record.annotated_key = parse_key_label(entry.key)
    return record
