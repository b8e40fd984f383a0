"""Variable-name encoder: identifier -> unit vector.

The built-in scheme splits a name into lowercase subtokens, embeds each
subtoken as the mean of pseudo-random vectors attached to its boundary-padded
character trigrams, mean-pools the subtokens and L2-normalizes.  Trigram
vectors come from a splitmix64 stream keyed by ``fnv1a64(trigram) ^ hash_seed``,
so the encoding is identical on every platform.

Each trigram vector is ``u + offset`` with ``u`` uniform on ``[-1, 1)^d``.  The
shared offset makes the space anisotropic the way mean-pooled pre-trained
encoders are: unrelated names sit near cosine 0.88 rather than 0, and names
sharing subtokens or trigrams rise above that.  Under the default offset the
similarity budget ``1 - cos < 0.15`` admits a few thousand names of a mined
corpus of about 6,000 around a typical variable, enough to fill the
``max_itr * k`` candidate budget in most cases; with ``offset=0`` it admits
almost nothing.  ``scripts/encoder_probe.py`` measures both quantities.

An embedding table file (``name<TAB>v1,...,vd``) can override the built-in
scheme for the names it lists.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

DEFAULT_DIMENSION = 64
DEFAULT_HASH_SEED = 0x5EED2023
DEFAULT_OFFSET = 0.6

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_PIECE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


class EmbeddingTableError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    dimension: int = DEFAULT_DIMENSION
    hash_seed: int = DEFAULT_HASH_SEED
    table_path: str | None = None
    offset: float = DEFAULT_OFFSET

    def __post_init__(self):
        if self.dimension < 8:
            raise ValueError(f"dimension must be >= 8, got {self.dimension}")
        if not 0 <= self.hash_seed <= _MASK64:
            raise ValueError("hash_seed must be an unsigned 64-bit integer")


def split_subtokens(name: str) -> list[str]:
    """Split on underscores, letter/digit and camelCase boundaries; lowercase.

    A run of capitals followed by a capitalized word is an acronym:
    ``HTMLParser`` -> ``["html", "parser"]``.
    """
    pieces = []
    for chunk in name.split("_"):
        pieces.extend(p.lower() for p in _PIECE.findall(chunk))
    return pieces or [name.lower()]


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def splitmix64_stream(state: int, n: int) -> np.ndarray:
    """The first ``n`` outputs of splitmix64 started from ``state``."""
    z = np.uint64(state) + _GAMMA * np.arange(1, n + 1, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@lru_cache(maxsize=1 << 16)
def _trigram_vector(trigram: str, dimension: int, hash_seed: int, offset: float) -> np.ndarray:
    bits = splitmix64_stream(fnv1a64(trigram.encode("utf-8")) ^ hash_seed, dimension)
    # top 53 bits -> uniform [-1, 1), then shift
    v = (bits >> np.uint64(11)).astype(np.float64) * (2.0 / 9007199254740992.0) - 1.0 + offset
    v.flags.writeable = False
    return v


def trigrams(subtoken: str) -> list[str]:
    padded = f"<{subtoken}>"
    return [padded[i:i + 3] for i in range(len(padded) - 2)]


@lru_cache(maxsize=1 << 17)
def _embed_cached(name: str, dimension: int, hash_seed: int, offset: float) -> np.ndarray:
    sub_vecs = []
    for sub in split_subtokens(name):
        grams = [_trigram_vector(g, dimension, hash_seed, offset) for g in trigrams(sub)]
        sub_vecs.append(np.mean(grams, axis=0))
    v = np.mean(sub_vecs, axis=0)
    v = v / np.linalg.norm(v)
    v.flags.writeable = False
    return v


def embed_name(name: str, cfg: EncoderConfig = EncoderConfig()) -> np.ndarray:
    return _embed_cached(name, cfg.dimension, cfg.hash_seed, cfg.offset)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # symmetric by construction: both norms and the dot product commute
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return min(1.0, max(-1.0, float(np.dot(a, b)) / denom))


def load_embedding_table(path: str | Path, cfg: EncoderConfig) -> dict[str, np.ndarray]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            name, sep, values = line.partition("\t")
            if not sep or not name:
                raise EmbeddingTableError(f"{path}:{lineno}: expected 'name<TAB>v1,...,vd'")
            try:
                vec = np.array([float(x) for x in values.split(",")], dtype=np.float64)
            except ValueError:
                raise EmbeddingTableError(f"{path}:{lineno}: non-numeric vector component") from None
            if vec.shape[0] != cfg.dimension:
                raise EmbeddingTableError(
                    f"{path}:{lineno}: dimension {vec.shape[0]} != configured {cfg.dimension}"
                )
            norm = np.linalg.norm(vec)
            if not np.isfinite(vec).all() or norm == 0.0:
                raise EmbeddingTableError(f"{path}:{lineno}: vector must be finite and non-zero")
            vec = vec / norm
            vec.flags.writeable = False
            table[name] = vec
    return table


class Encoder:
    """The configured name encoder: table lookups first, hashed trigrams otherwise."""

    def __init__(self, cfg: EncoderConfig | None = None):
        self.cfg = cfg or EncoderConfig()
        self.table: dict[str, np.ndarray] = {}
        self.table_id = None
        if self.cfg.table_path:
            self.table = load_embedding_table(self.cfg.table_path, self.cfg)
            self.table_id = hashlib.sha256(Path(self.cfg.table_path).read_bytes()).hexdigest()[:16]

    @property
    def dimension(self) -> int:
        return self.cfg.dimension

    def embed(self, name: str) -> np.ndarray:
        vec = self.table.get(name)
        if vec is None:
            vec = embed_name(name, self.cfg)
        return vec

    def embed_many(self, names) -> np.ndarray:
        if not names:
            return np.zeros((0, self.dimension))
        return np.stack([self.embed(n) for n in names])

    def fingerprint(self) -> dict:
        return {"dimension": self.cfg.dimension, "hash_seed": self.cfg.hash_seed, "offset": self.cfg.offset,
                "table": self.table_id}
