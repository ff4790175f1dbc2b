"""Domain types and on-disk formats for representations and word norms.

Two embedding formats are supported:

* ``header-text``: first line ``"V D"``, then ``V`` lines ``word v1 ... vD``
  separated by single spaces.
* ``csv``: header ``word,d0,...,d{D-1}`` followed by one row per word.

Norm tables are csv files with columns ``word,value``; the semantics of a
table (name, category, kind, label set) come from a YAML manifest.
"""

from __future__ import annotations

import csv
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import yaml

DATA_TYPES = ("text", "behavior", "brain")
NORM_KINDS = ("numeric", "binary", "multiclass")
EMBEDDING_FORMATS = ("header-text", "csv")

#: Norm categories shipped as defaults; manifests may use any other string.
NORM_CATEGORIES = (
    "Frequency",
    "Semantic Diversity",
    "Familiarity",
    "Visual Lexical Decision",
    "Part of Speech",
    "Semantic Neighborhood",
    "Naming",
    "Concreteness",
    "Sensory",
    "Motor",
    "Age of Acquisition",
    "Auditory Lexical Decision",
    "Dominance",
    "Valence",
    "Arousal",
    "Iconicity/Transparency",
    "Emotion",
    "Semantic Decision",
    "Social/Moral",
    "Recognition Memory",
    "Space/Time/Quantity",
    "Imageability",
    "Number of Features",
    "Animacy",
    "Goals/Needs",
    "Associatability",
    "This/That",
)

_MISSING_TOKENS = {"", "na", "nan", "null", "none"}


class FormatError(ValueError):
    """A file does not follow the expected on-disk format."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


def normalize_word(word: str) -> str:
    """NFC-normalize a word. Case is left untouched."""
    return unicodedata.normalize("NFC", word)


class VocabSet:
    """Sorted, duplicate-free sequence of words with set algebra.

    Set operators (``&``, ``|``, ``-``) return new :class:`VocabSet` objects, so
    the type is closed under union, intersection and difference.
    """

    __slots__ = ("_words", "_index")

    def __init__(self, words: Iterable[str] = ()):
        self._words = tuple(sorted(set(words)))
        self._index: dict[str, int] | None = None

    @property
    def words(self) -> tuple[str, ...]:
        return self._words

    def index(self) -> dict[str, int]:
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self._words)}
        return self._index

    def positions(self, words: Iterable[str]) -> np.ndarray:
        idx = self.index()
        return np.fromiter((idx[w] for w in words), dtype=np.intp)

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self) -> Iterator[str]:
        return iter(self._words)

    def __contains__(self, word: object) -> bool:
        return word in self.index()

    def __getitem__(self, i):
        return self._words[i]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, VocabSet):
            return self._words == other._words
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._words)

    def __and__(self, other: VocabSet) -> VocabSet:
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        return VocabSet(w for w in small if w in big)

    def __or__(self, other: VocabSet) -> VocabSet:
        return VocabSet(self._words + other._words)

    def __sub__(self, other: VocabSet) -> VocabSet:
        return VocabSet(w for w in self if w not in other)

    def issubset(self, other: VocabSet) -> bool:
        return all(w in other for w in self)

    def __repr__(self) -> str:
        head = ", ".join(self._words[:5])
        more = ", ..." if len(self) > 5 else ""
        return f"VocabSet([{head}{more}], n={len(self)})"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Representation:
    """Word-indexed dense matrix with provenance metadata.

    Rows follow the (lexicographically sorted) vocabulary. Instances are
    immutable; build them with :meth:`from_rows` when row order is arbitrary.
    """

    name: str
    data_type: str
    vocab: VocabSet
    matrix: np.ndarray

    def __post_init__(self):
        if self.data_type not in DATA_TYPES:
            raise ValueError(f"unknown data type {self.data_type!r}; expected one of {DATA_TYPES}")
        m = self.matrix
        if m.ndim != 2 or m.shape[1] < 1:
            raise ValueError(f"{self.name}: matrix must be 2-D with at least one column")
        if m.shape[0] != len(self.vocab):
            raise ValueError(
                f"{self.name}: {m.shape[0]} rows for a vocabulary of {len(self.vocab)} words"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError(f"{self.name}: matrix contains non-finite values")
        if m.dtype != np.float64 or m.flags.writeable:
            object.__setattr__(self, "matrix", _readonly(m))

    @classmethod
    def from_rows(cls, name: str, data_type: str, words: Sequence[str], matrix) -> Representation:
        """Build from rows in arbitrary order; duplicates are an error."""
        matrix = np.asarray(matrix, dtype=np.float64)
        words = [normalize_word(w) for w in words]
        seen: set[str] = set()
        for w in words:
            if w in seen:
                raise ValueError(f"{name}: duplicate word {w!r}")
            seen.add(w)
        order = sorted(range(len(words)), key=words.__getitem__)
        return cls(name, data_type, VocabSet(words), matrix[order] if len(order) else matrix)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.vocab)

    def rows(self, words: Iterable[str]) -> np.ndarray:
        return self.matrix[self.vocab.positions(words)]

    def subset(self, vocab: VocabSet, name: str | None = None) -> Representation:
        """Restrict to ``vocab`` (which must be contained in this vocabulary)."""
        return Representation(
            name or self.name, self.data_type, vocab, self.matrix[self.vocab.positions(vocab)]
        )

    def renamed(self, name: str) -> Representation:
        return Representation(name, self.data_type, self.vocab, self.matrix)


@dataclass(frozen=True)
class NormEntry:
    """One manifest record describing a norm file."""

    file: Path
    name: str
    category: str
    kind: str
    labels: tuple[str, ...] | None = None
    line: int | None = None


@dataclass(frozen=True, eq=False)
class NormTable:
    """Word norm: a per-word numeric rating or categorical label.

    For categorical kinds, ``values`` holds integer class ids indexing
    ``labels``. ``values`` is aligned to ``vocab``.
    """

    name: str
    category: str
    kind: str
    vocab: VocabSet
    values: np.ndarray
    labels: tuple[str, ...] | None = None
    n_dropped: int = 0

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if len(self.values) != len(self.vocab):
            raise ValueError(f"{self.name}: values do not match vocabulary")
        if self.kind == "numeric":
            vals = _readonly(self.values)
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"{self.name}: non-finite numeric value")
        else:
            if self.labels is None or len(self.labels) < 2:
                raise ValueError(f"{self.name}: categorical norms need a label set of size >= 2")
            vals = np.array(self.values, dtype=np.int64, copy=True)
            if vals.size and (vals.min() < 0 or vals.max() >= len(self.labels)):
                raise ValueError(f"{self.name}: class id outside label set")
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def is_categorical(self) -> bool:
        return self.kind != "numeric"

    @property
    def entries(self) -> dict:
        if self.is_categorical:
            return {w: self.labels[int(v)] for w, v in zip(self.vocab, self.values)}
        return {w: float(v) for w, v in zip(self.vocab, self.values)}

    def target(self, words: Iterable[str]) -> np.ndarray:
        return self.values[self.vocab.positions(words)]

    def __len__(self) -> int:
        return len(self.vocab)


# --------------------------------------------------------------------- embeddings


def _parse_float(token: str, path, lineno: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise FormatError(f"malformed number {token!r}", path, lineno) from None
    if not math.isfinite(v):
        raise FormatError(f"non-finite value {token!r}", path, lineno)
    return v


def load_embeddings(
    path: str | Path, format: str = "header-text", name: str | None = None, data_type: str = "text"
) -> Representation:
    """Read an embedding file and return a validated :class:`Representation`.

    Rows are re-sorted lexicographically by word. Malformed lines, dimension
    mismatches, non-finite values and duplicate words raise
    :class:`FormatError`.
    """
    path = Path(path)
    if format not in EMBEDDING_FORMATS:
        raise ValueError(f"unknown embedding format {format!r}")
    name = name or path.stem
    words: list[str] = []
    rows: list[list[float]] = []
    seen: dict[str, int] = {}

    def add(word: str, values: list[float], lineno: int):
        word = normalize_word(word)
        if word in seen:
            raise FormatError(f"duplicate word {word!r} (first on line {seen[word]})", path, lineno)
        seen[word] = lineno
        words.append(word)
        rows.append(values)

    with open(path, encoding="utf-8", newline="") as fh:
        if format == "header-text":
            header = fh.readline()
            parts = header.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise FormatError("header must be 'V D'", path, 1)
            n_words, dim = int(parts[0]), int(parts[1])
            if dim < 1:
                raise FormatError("dimension must be positive", path, 1)
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\r\n")
                if not line.strip():
                    continue
                tokens = line.split(" ")
                if len(tokens) - 1 != dim:
                    raise FormatError(
                        f"dimension mismatch on row {tokens[0]!r}: "
                        f"expected {dim} values, got {len(tokens) - 1}",
                        path,
                        lineno,
                    )
                add(tokens[0], [_parse_float(t, path, lineno) for t in tokens[1:]], lineno)
            if len(words) != n_words:
                raise FormatError(f"header declares {n_words} words, found {len(words)}", path, 1)
        else:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "word" or len(header) < 2:
                raise FormatError("csv header must be 'word,d0,...'", path, 1)
            dim = len(header) - 1
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) - 1 != dim:
                    raise FormatError(
                        f"dimension mismatch on row {row[0]!r}: expected {dim} values, got {len(row) - 1}",
                        path,
                        lineno,
                    )
                add(row[0], [_parse_float(t, path, lineno) for t in row[1:]], lineno)

    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return Representation.from_rows(name, data_type, words, matrix)


def write_embeddings(rep: Representation, path: str | Path, format: str = "header-text") -> None:
    """Write ``rep`` using shortest round-trip float formatting."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if format == "header-text":
            fh.write(f"{len(rep)} {rep.dim}\n")
            for word, row in zip(rep.vocab, rep.matrix):
                fh.write(word + " " + " ".join(repr(float(v)) for v in row) + "\n")
        elif format == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["word"] + [f"d{j}" for j in range(rep.dim)])
            for word, row in zip(rep.vocab, rep.matrix):
                writer.writerow([word] + [repr(float(v)) for v in row])
        else:
            raise ValueError(f"unknown embedding format {format!r}")


# -------------------------------------------------------------------------- norms

_REQUIRED_MANIFEST_KEYS = ("file", "name", "category", "kind")


def _node_lines(node) -> list[int]:
    """Start line (1-based) of each item in a YAML sequence node."""
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            if key.value == "norms":
                node = value
                break
    if isinstance(node, yaml.SequenceNode):
        return [item.start_mark.line + 1 for item in node.value]
    return []


def load_norm_manifest(path: str | Path) -> list[NormEntry]:
    """Parse a YAML manifest describing norm files.

    The document is either a list of entries or a mapping with a ``norms``
    list. Each entry has keys ``file`` (relative to the manifest), ``name``,
    ``category``, ``kind`` and, for binary/multiclass norms, ``labels``.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
        lines = _node_lines(yaml.compose(text))
    except yaml.YAMLError as exc:
        raise FormatError(f"invalid YAML: {exc}", path) from None
    if isinstance(doc, dict):
        doc = doc.get("norms")
    if not isinstance(doc, list):
        raise FormatError("manifest must be a list of norms or a mapping with a 'norms' list", path)

    entries: list[NormEntry] = []
    names: set[str] = set()
    for i, raw in enumerate(doc):
        line = lines[i] if i < len(lines) else None
        if not isinstance(raw, dict):
            raise FormatError("manifest entry must be a mapping", path, line)
        for key in _REQUIRED_MANIFEST_KEYS:
            if key not in raw or raw[key] in (None, ""):
                raise FormatError(f"manifest entry missing required key {key!r}", path, line)
        kind = str(raw["kind"])
        if kind not in NORM_KINDS:
            raise FormatError(f"unknown norm kind {kind!r}", path, line)
        labels = raw.get("labels")
        if kind == "numeric":
            labels = None
        else:
            if not isinstance(labels, list) or len(labels) < 2:
                raise FormatError(f"{kind} norm needs 'labels' with at least 2 entries", path, line)
            labels = tuple(str(x) for x in labels)
            if len(set(labels)) != len(labels):
                raise FormatError("duplicate labels", path, line)
            if kind == "binary" and len(labels) != 2:
                raise FormatError("binary norm needs exactly 2 labels", path, line)
        name = str(raw["name"])
        if name in names:
            raise FormatError(f"duplicate norm name {name!r}", path, line)
        names.add(name)
        file = (path.parent / str(raw["file"])).resolve()
        if not file.exists():
            raise FormatError(f"norm file does not exist: {file}", path, line)
        entries.append(NormEntry(file, name, str(raw["category"]), kind, labels, line))
    return entries


def load_norm_table(path: str | Path, entry: NormEntry) -> NormTable:
    """Read a ``word,value`` csv according to its manifest ``entry``.

    Rows whose value is missing or non-finite are dropped and counted in
    ``NormTable.n_dropped``. Categorical values outside the label set and
    tables left empty after dropping raise :class:`FormatError`.
    """
    path = Path(path)
    words: list[str] = []
    values: list = []
    seen: set[str] = set()
    dropped = 0
    label_ids = {lab: i for i, lab in enumerate(entry.labels or ())}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["word", "value"]:
            raise FormatError("norm csv header must be 'word,value'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError("expected 2 columns", path, lineno)
            word, raw = normalize_word(row[0]), row[1].strip()
            if raw.lower() in _MISSING_TOKENS:
                dropped += 1
                continue
            if entry.kind == "numeric":
                try:
                    v = float(raw)
                except ValueError:
                    raise FormatError(f"non-numeric value {raw!r} in numeric norm", path, lineno) from None
                if not math.isfinite(v):
                    dropped += 1
                    continue
            else:
                if raw not in label_ids:
                    raise FormatError(f"unknown label {raw!r}", path, lineno)
                v = label_ids[raw]
            if word in seen:
                raise FormatError(f"duplicate word {word!r}", path, lineno)
            seen.add(word)
            words.append(word)
            values.append(v)
    if not words:
        raise FormatError("norm table is empty after dropping missing values", path)
    order = sorted(range(len(words)), key=words.__getitem__)
    vocab = VocabSet(words)
    dtype = np.float64 if entry.kind == "numeric" else np.int64
    vals = np.asarray([values[i] for i in order], dtype=dtype)
    return NormTable(entry.name, entry.category, entry.kind, vocab, vals, entry.labels, dropped)


def load_norms(manifest_path: str | Path) -> list[NormTable]:
    return [load_norm_table(e.file, e) for e in load_norm_manifest(manifest_path)]


def write_norm_table(norm: NormTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["word", "value"])
        for word, value in norm.entries.items():
            writer.writerow([word, value if norm.is_categorical else repr(value)])


def write_norm_manifest(norms: Sequence[NormTable], path: str | Path, files: Mapping[str, str]) -> None:
    """Write a manifest for ``norms``; ``files`` maps norm name to a relative csv path."""
    doc = {"norms": []}
    for norm in norms:
        item = {"file": files[norm.name], "name": norm.name, "category": norm.category, "kind": norm.kind}
        if norm.labels is not None:
            item["labels"] = list(norm.labels)
        doc["norms"].append(item)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")


@dataclass(frozen=True)
class FrequencyTable:
    """Word occurrence counts used for coverage statistics."""

    counts: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(c < 0 or not math.isfinite(c) for c in self.counts.values()):
            raise ValueError("frequency counts must be finite and nonnegative")
        if self.total <= 0:
            raise ValueError("frequency table total must be positive")

    @property
    def total(self) -> float:
        return math.fsum(self.counts.values())


def load_frequency_table(path: str | Path) -> FrequencyTable:
    """Read a ``word,count`` csv. Repeated words are summed."""
    path = Path(path)
    counts: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["word", "count"]:
            raise FormatError("frequency csv header must be 'word,count'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError("expected 2 columns", path, lineno)
            word = normalize_word(row[0])
            counts[word] = counts.get(word, 0.0) + _parse_float(row[1], path, lineno)
    return FrequencyTable(counts)
