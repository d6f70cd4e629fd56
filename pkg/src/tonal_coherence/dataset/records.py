"""Corpus row type shared by the ingestion modules and the analysis pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from tonal_coherence.pitch.key_estimation import TonalCenter
from tonal_coherence.pitch.space import NoteEvent


@dataclass
class PieceRecord:
    """A single piece: identity, grouping, metadata and its notes."""
    id: str
    group: str = ""
    metadata: Dict[str, str] = field(default_factory=dict)
    notes: List[NoteEvent] = field(default_factory=list)
    annotated_key: Optional[TonalCenter] = None
    # ingestion diagnostics, e.g. unmatched MIDI note-offs
    warnings: List[str] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not any(not n.is_percussion for n in self.notes)
