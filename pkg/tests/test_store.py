import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from psyrepr.store import (
    NORM_CATEGORIES,
    FormatError,
    NormEntry,
    Representation,
    VocabSet,
    load_embeddings,
    load_frequency_table,
    load_norm_manifest,
    load_norm_table,
    write_embeddings,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_header_text_literal_parse(tmp_path):
    rep = load_embeddings(_write(tmp_path / "e.txt", "2 2\na 1 0\nb 0 1\n"))
    assert rep.vocab.words == ("a", "b")
    np.testing.assert_array_equal(rep.matrix, np.eye(2))
    assert rep.dim == 2


def test_rows_resorted(tmp_path):
    rep = load_embeddings(_write(tmp_path / "e.txt", "2 2\nb 0 1\na 1 0\n"))
    assert rep.vocab.words == ("a", "b")
    np.testing.assert_array_equal(rep.matrix, np.eye(2))


def test_dimension_mismatch_names_row(tmp_path):
    with pytest.raises(FormatError, match="'a'|a"):
        load_embeddings(_write(tmp_path / "e.txt", "2 3\na 1 0\nb 0 1 0\n"))
    try:
        load_embeddings(_write(tmp_path / "e.txt", "2 3\na 1 0\nb 0 1 0\n"))
    except FormatError as exc:
        assert exc.line == 2


@pytest.mark.parametrize(
    "text",
    ["2 2\na 1 0\na 0 1\n", "2 2\na 1 nan\nb 0 1\n", "2 2\na 1 x\nb 0 1\n", "3 2\na 1 0\nb 0 1\n"],
    ids=["duplicate", "non-finite", "malformed", "count-mismatch"],
)
def test_embedding_errors(tmp_path, text):
    with pytest.raises(FormatError):
        load_embeddings(_write(tmp_path / "e.txt", text))


def test_csv_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    rep = Representation.from_rows("r", "brain", ["x", "y", "z"], rng.standard_normal((3, 4)))
    write_embeddings(rep, tmp_path / "r.csv", "csv")
    back = load_embeddings(tmp_path / "r.csv", "csv", data_type="brain")
    assert back.vocab == rep.vocab
    assert np.array_equal(back.matrix, rep.matrix)
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "word,d0,d1,d2,d3"


def test_nfc_without_case_folding():
    rep = Representation.from_rows("r", "text", ["Café", "cafe"], np.eye(2))
    assert "Café" in rep.vocab
    assert len(rep.vocab) == 2


def test_representation_invariants():
    with pytest.raises(ValueError):
        Representation("r", "text", VocabSet(["a", "b"]), np.eye(3))
    with pytest.raises(ValueError):
        Representation.from_rows("r", "text", ["a", "a"], np.eye(2))
    with pytest.raises(ValueError):
        Representation("r", "audio", VocabSet(["a"]), np.ones((1, 1)))
    rep = Representation("r", "text", VocabSet(["a"]), np.ones((1, 1)))
    with pytest.raises(ValueError):
        rep.matrix[0, 0] = 2.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.text(alphabet="abcdefgh", min_size=1, max_size=4), min_size=2, max_size=12, unique=True), st.randoms())
def test_load_is_order_insensitive(tmp_path_factory, words, rnd):
    d = tmp_path_factory.mktemp("perm")
    rows = [f"{w} {i} {-i}" for i, w in enumerate(words)]
    a = load_embeddings(_write(d / "a.txt", f"{len(words)} 2\n" + "\n".join(rows) + "\n"))
    rnd.shuffle(rows)
    b = load_embeddings(_write(d / "b.txt", f"{len(words)} 2\n" + "\n".join(rows) + "\n"))
    assert a.vocab == b.vocab and np.array_equal(a.matrix, b.matrix)


def test_vocabset_algebra():
    a, b = VocabSet("cab"), VocabSet("bcd")
    assert a.words == ("a", "b", "c")
    assert (a & b).words == ("b", "c")
    assert (a | b).words == ("a", "b", "c", "d")
    assert (a - b).words == ("a",)
    assert isinstance(a & b, VocabSet)
    assert VocabSet(["b"]).issubset(a)


# ------------------------------------------------------------------ norms


def _entry(tmp_path, kind="numeric", labels=None):
    return NormEntry(tmp_path / "n.csv", "n", "Emotion", kind, labels)


def test_numeric_norm(tmp_path):
    _write(tmp_path / "n.csv", "word,value\ncat,0.9\ndog,0.3\n")
    norm = load_norm_table(tmp_path / "n.csv", _entry(tmp_path))
    assert norm.entries == {"cat": 0.9, "dog": 0.3}
    assert norm.n_dropped == 0


def test_missing_values_dropped_and_counted(tmp_path):
    _write(tmp_path / "n.csv", "word,value\ncat,NaN\ndog,0.3\n")
    norm = load_norm_table(tmp_path / "n.csv", _entry(tmp_path))
    assert norm.vocab.words == ("dog",)
    assert norm.n_dropped == 1


def test_unknown_label(tmp_path):
    _write(tmp_path / "n.csv", "word,value\ncat,those\n")
    with pytest.raises(FormatError, match="those"):
        load_norm_table(tmp_path / "n.csv", _entry(tmp_path, "binary", ("this", "that")))


def test_empty_norm_after_dropping(tmp_path):
    _write(tmp_path / "n.csv", "word,value\ncat,\n")
    with pytest.raises(FormatError):
        load_norm_table(tmp_path / "n.csv", _entry(tmp_path))


def test_categorical_values_are_class_ids(tmp_path):
    _write(tmp_path / "n.csv", "word,value\ncat,that\ndog,this\n")
    norm = load_norm_table(tmp_path / "n.csv", _entry(tmp_path, "binary", ("this", "that")))
    assert norm.entries == {"cat": "that", "dog": "this"}
    assert norm.values.tolist() == [1, 0]


def test_manifest_two_entries(tmp_path):
    for f in ("a.csv", "b.csv"):
        _write(tmp_path / f, "word,value\ncat,1\n")
    doc = [
        {"file": "a.csv", "name": "a", "category": "Emotion", "kind": "numeric"},
        {"file": "b.csv", "name": "b", "category": "This/That", "kind": "binary", "labels": ["this", "that"]},
    ]
    _write(tmp_path / "m.yaml", yaml.safe_dump(doc))
    assert len(load_norm_manifest(tmp_path / "m.yaml")) == 2


def test_manifest_missing_kind_is_line_anchored(tmp_path):
    _write(tmp_path / "a.csv", "word,value\ncat,1\n")
    _write(tmp_path / "m.yaml", "- file: a.csv\n  name: a\n  category: Emotion\n")
    with pytest.raises(FormatError, match="kind") as info:
        load_norm_manifest(tmp_path / "m.yaml")
    assert info.value.line == 1


def test_manifest_nonexistent_file(tmp_path):
    _write(tmp_path / "m.yaml", "- {file: gone.csv, name: a, category: Emotion, kind: numeric}\n")
    with pytest.raises(FormatError, match="gone.csv"):
        load_norm_manifest(tmp_path / "m.yaml")


def test_manifest_with_292_norms_in_27_categories(tmp_path):
    assert len(NORM_CATEGORIES) == 27
    _write(tmp_path / "n.csv", "word,value\ncat,1\n")
    doc = {"norms": [
        {"file": "n.csv", "name": f"norm{i}", "category": NORM_CATEGORIES[i % 27], "kind": "numeric"}
        for i in range(292)
    ]}
    _write(tmp_path / "m.yaml", yaml.safe_dump(doc))
    entries = load_norm_manifest(tmp_path / "m.yaml")
    assert len(entries) == 292
    assert len({e.category for e in entries}) == 27


def test_frequency_table(tmp_path):
    _write(tmp_path / "f.csv", "word,count\nthe,70\ncat,10\nthe,5\n")
    freq = load_frequency_table(tmp_path / "f.csv")
    assert freq.counts == {"the": 75.0, "cat": 10.0}
    assert freq.total == 85.0
