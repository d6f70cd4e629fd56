import io

import pytest

from tonal_coherence.dataset.manifest import load_entry, load_manifest, load_piece_file
from tonal_coherence.dataset.notes_table import ingest_notes_table, write_notes_table
from tonal_coherence.pitch.key_estimation import TonalCenter
from tonal_coherence.utils.errors import NotesTableError, UnsupportedFormatError


def _table(text: str):
    return ingest_notes_table(io.StringIO(text))


def test_absolute_tpc_row():
    pieces = _table("piece_id\ttpc\tduration\np1\t17\t2.0\n")
    note = pieces["p1"].notes[0]
    assert note.spelled_lof == 17
    assert note.chromatic_pc == 0
    assert note.duration == 2.0


def test_relative_fifths_row():
    pieces = _table("piece_id\tfifths\tduration\np1\t1\t1\np1\t-6\t1\n")
    assert [n.spelled_lof for n in pieces["p1"].notes] == [18, 11]


def test_malformed_duration_names_the_line():
    with pytest.raises(NotesTableError) as exc:
        _table("piece_id\ttpc\tduration\np1\t17\t1\np1\t18\tx\n")
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_missing_duration_is_a_row_error():
    with pytest.raises(NotesTableError) as exc:
        _table("piece_id\ttpc\tduration\np1\t17\t\n")
    assert exc.value.line == 2


def test_tpc_out_of_range():
    with pytest.raises(NotesTableError):
        _table("piece_id\ttpc\tduration\np1\t35\t1\n")
    with pytest.raises(NotesTableError):
        _table("piece_id\tfifths\tduration\np1\t18\t1\n")


def test_header_needs_exactly_one_position_column():
    with pytest.raises(NotesTableError):
        _table("piece_id\tduration\np1\t1\n")
    with pytest.raises(NotesTableError):
        _table("piece_id\ttpc\tfifths\tduration\np1\t17\t0\t1\n")


def test_global_key_and_multiple_pieces():
    pieces = _table(
        "piece_id\ttpc\tduration\tglobal_key\n"
        "a\t17\t1\tC\n"
        "b\t21\t1\te\n"
        "a\t18\t1\tC\n"
    )
    assert list(pieces) == ["a", "b"]
    assert pieces["a"].annotated_key == TonalCenter(lof_index=17, mode="major")
    assert pieces["b"].annotated_key.mode == "minor"
    assert len(pieces["a"].notes) == 2


def test_conflicting_global_key():
    with pytest.raises(NotesTableError):
        _table("piece_id\ttpc\tduration\tglobal_key\na\t17\t1\tC\na\t18\t1\tG\n")


def test_written_table_reads_back(tmp_path):
    path = tmp_path / "s.tsv"
    write_notes_table(path, "s1", [17, 17, 18, 23], center=TonalCenter(lof_index=17))
    piece = ingest_notes_table(path)["s1"]
    assert [n.spelled_lof for n in piece.notes] == [17, 17, 18, 23]
    assert piece.annotated_key.lof_index == 17
    assert path.read_bytes().startswith(b"piece_id\ttpc\tduration\tglobal_key\n")


def test_load_manifest(mini_corpus):
    entries = load_manifest(mini_corpus / "manifest.tsv")
    assert len(entries) == 10
    first = entries[0]
    assert first.id == "bach_prelude"
    assert first.group == "classical"
    assert first.metadata["composer"] == "Bach"
    assert first.metadata["year"] == "1722"
    assert first.path == mini_corpus / "bach_prelude.tsv"


def test_manifest_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "m.tsv"
    path.write_text("id\tpath\tgroup\na\tx.tsv\tg\na\ty.tsv\tg\n", encoding="utf-8")
    with pytest.raises(NotesTableError):
        load_manifest(path)


def test_load_entry_applies_manifest_key(mini_corpus):
    entries = {e.id: e for e in load_manifest(mini_corpus / "manifest.tsv")}
    piece = load_entry(entries["pop_song_a"])
    assert piece.annotated_key.lof_index == 16
    assert piece.group == "popular"
    assert piece.metadata["genre"] == "pop"

    scale = load_entry(entries["scale"])
    assert scale.annotated_key.label == "C"
    assert len(scale.notes) == 7


def test_load_entry_missing_file(mini_corpus, tmp_path):
    entry = load_manifest(mini_corpus / "manifest.tsv")[0]
    entry.path = tmp_path / "missing.tsv"
    with pytest.raises(FileNotFoundError):
        load_entry(entry)


def test_unknown_extension(tmp_path):
    path = tmp_path / "piece.xml"
    path.write_text("<score/>", encoding="utf-8")
    with pytest.raises(UnsupportedFormatError):
        load_piece_file(path)


def test_single_piece_table_takes_requested_id(mini_corpus):
    piece = load_piece_file(mini_corpus / "liszt_etude.tsv", "renamed")
    assert piece.id == "renamed"
    assert piece.annotated_key.label == "e"
