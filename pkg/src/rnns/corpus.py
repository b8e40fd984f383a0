"""The substitute corpus: every distinct variable name mined from a code
collection, stored with its embedding.

File format (JSON lines)::

    {"count": N, "dimension": d, "fingerprint": {...}, "format": "rnns-corpus", "language": "java", "version": 1}
    {"embedding": [...], "name": "accIdx"}
    ...
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .encoder import Encoder
from .lexing import LexError, SourceUnit, extract_variables, is_valid_identifier

log = logging.getLogger(__name__)

FORMAT = "rnns-corpus"
VERSION = 1
MIN_NAME_LENGTH = 1
MAX_NAME_LENGTH = 30

EXTENSIONS = {"java": (".java",), "python": (".py",), "c": (".c", ".h")}


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class SubstituteRecord:
    name: str
    length: int
    embedding: np.ndarray


class SubstituteCorpus:
    """Immutable, name-sorted collection of substitute records.

    Embeddings live in one ``(n, d)`` read-only matrix; row ``i`` belongs to
    ``names[i]``.  Because names are sorted, the row index doubles as the
    lexicographic rank used for tie-breaking.
    """

    def __init__(self, names: Iterable[str], embeddings: np.ndarray, language: str, fingerprint: dict):
        names = list(names)
        order = sorted(range(len(names)), key=names.__getitem__)
        self.names = tuple(names[i] for i in order)
        if len(set(self.names)) != len(self.names):
            raise CorpusError("duplicate names in corpus")
        emb = np.asarray(embeddings, dtype=np.float64)
        if emb.ndim != 2 or emb.shape[0] != len(self.names):
            raise CorpusError("embedding matrix shape does not match names")
        self.embeddings = np.ascontiguousarray(emb[order])
        self.embeddings.flags.writeable = False
        self.lengths = np.array([len(n) for n in self.names], dtype=np.int64)
        self.lengths.flags.writeable = False
        self.language = language
        self.fingerprint = dict(fingerprint)
        self._index = {n: i for i, n in enumerate(self.names)}
        self.skipped = 0

    @property
    def dimension(self) -> int:
        return self.embeddings.shape[1]

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, i: int) -> SubstituteRecord:
        return SubstituteRecord(self.names[i], int(self.lengths[i]), self.embeddings[i])

    def __iter__(self) -> Iterator[SubstituteRecord]:
        return (self[i] for i in range(len(self)))

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def records(self) -> list[SubstituteRecord]:
        return list(self)


def iter_units(paths: Iterable[str | Path], language: str) -> Iterator[SourceUnit | Exception]:
    """Yield source units from directories of source files and from dataset
    (``.jsonl``) files.  Unreadable inputs are yielded as exceptions."""
    exts = EXTENSIONS[language]
    for root in paths:
        root = Path(root)
        if root.is_file() and root.suffix == ".jsonl":
            from .datasets import load_dataset

            for unit in load_dataset(root):
                if unit.language == language:
                    yield unit
            continue
        files = [root] if root.is_file() else sorted(p for p in root.rglob("*") if p.suffix in exts and p.is_file())
        for f in files:
            try:
                code = f.read_text(encoding="utf-8")
                if code:
                    yield SourceUnit(code, language)
            except (OSError, UnicodeDecodeError) as exc:
                yield exc


def mine_names(units: Iterable[SourceUnit], language: str) -> set[str]:
    """Variable names of ``units`` that pass the corpus length and validity filters."""
    names = set()
    for unit in units:
        for var in extract_variables(unit):
            if MIN_NAME_LENGTH <= len(var.name) <= MAX_NAME_LENGTH and is_valid_identifier(var.name, language):
                names.add(var.name)
    return names


def build_corpus(paths: Iterable[str | Path], language: str, encoder: Encoder | None = None) -> SubstituteCorpus:
    encoder = encoder or Encoder()
    names: set[str] = set()
    skipped = 0
    seen_any = False
    for unit in iter_units(paths, language):
        if isinstance(unit, Exception):
            skipped += 1
            continue
        seen_any = True
        try:
            names.update(mine_names([unit], language))
        except LexError:
            skipped += 1
    if skipped:
        log.warning("skipped %d unreadable or unlexable inputs", skipped)
    if not seen_any:
        raise CorpusError(f"no readable {language} sources found")
    if not names:
        raise CorpusError("no variables extracted; corpus would be empty")
    ordered = sorted(names)
    corpus = SubstituteCorpus(ordered, encoder.embed_many(ordered), language, encoder.fingerprint())
    corpus.skipped = skipped
    return corpus


def corpus_from_names(names: Iterable[str], language: str, encoder: Encoder | None = None) -> SubstituteCorpus:
    encoder = encoder or Encoder()
    ordered = sorted(set(names))
    return SubstituteCorpus(ordered, encoder.embed_many(ordered), language, encoder.fingerprint())


def dumps_corpus(corpus: SubstituteCorpus) -> str:
    header = {
        "format": FORMAT,
        "version": VERSION,
        "language": corpus.language,
        "dimension": corpus.dimension,
        "fingerprint": corpus.fingerprint,
        "count": len(corpus),
    }
    lines = [json.dumps(header, sort_keys=True)]
    for name, row in zip(corpus.names, corpus.embeddings):
        lines.append(json.dumps({"name": name, "embedding": row.tolist()}, sort_keys=True))
    return "\n".join(lines) + "\n"


def save_corpus(corpus: SubstituteCorpus, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_corpus(corpus), encoding="utf-8")
    os.replace(tmp, path)


def load_corpus(path: str | Path, encoder: Encoder | None = None) -> SubstituteCorpus:
    """Load a corpus file; with ``encoder``, reject files built under a different encoder."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise CorpusError(f"{path}: empty corpus file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}:1: malformed header: {exc}") from None
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise CorpusError(f"{path}: not a {FORMAT} v{VERSION} file")
    d = header["dimension"]
    names, rows = [], []
    for lineno, line in enumerate(lines[1:], 2):
        try:
            rec = json.loads(line)
            name, emb = rec["name"], rec["embedding"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorpusError(f"{path}:{lineno}: malformed record ({exc})") from None
        if len(emb) != d:
            raise CorpusError(f"{path}:{lineno}: embedding has dimension {len(emb)}, header says {d}")
        names.append(name)
        rows.append(emb)
    if len(names) != header.get("count", len(names)):
        raise CorpusError(f"{path}: header count {header['count']} != {len(names)} records")
    if encoder is not None:
        if d != encoder.dimension:
            raise CorpusError(f"{path}: corpus dimension {d} != encoder dimension {encoder.dimension}")
        if header["fingerprint"] != encoder.fingerprint():
            raise CorpusError(
                f"{path}: fingerprint {header['fingerprint']} does not match encoder {encoder.fingerprint()}"
            )
    emb = np.array(rows, dtype=np.float64).reshape(len(rows), d)
    return SubstituteCorpus(names, emb, header["language"], header["fingerprint"])
