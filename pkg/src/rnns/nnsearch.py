"""Constrained exact top-k search over the substitute corpus.

A record is feasible for a variable when (both strictly)

    1 - cos(E(sub), E(var)) < epsilon        and        |len(sub) - len(var)| < delta

and it is neither the variable itself nor an excluded (already tried or
colliding) name.  Feasible records are ranked by cosine similarity to the seed,
ties broken by ascending name.  Constraints always refer to the ORIGINAL
variable, not to whatever name currently stands in for it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Collection

import numpy as np

from .corpus import SubstituteCorpus, SubstituteRecord
from .encoder import cosine
from .lexing import is_valid_identifier


@dataclass(frozen=True)
class SearchConstraints:
    epsilon: float = 0.15
    delta: int = 4
    k: int = 60
    unlimited: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 2.0:
            raise ValueError(f"epsilon must lie in [0, 2], got {self.epsilon}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def feasible(
    sub: SubstituteRecord,
    var_name: str,
    var_emb: np.ndarray,
    c: SearchConstraints,
    collisions: AbstractSet[str] = frozenset(),
    language: str | None = None,
) -> bool:
    if c.unlimited:
        return True
    if sub.name == var_name or sub.name in collisions:
        return False
    if language is not None and not is_valid_identifier(sub.name, language):
        return False
    if not 1.0 - cosine(sub.embedding, var_emb) < c.epsilon:
        return False
    return abs(sub.length - len(var_name)) < c.delta


def _row_dot(matrix: np.ndarray, v: np.ndarray) -> np.ndarray:
    # elementwise product + per-row reduction: identical rows give identical scores,
    # which a BLAS matrix-vector product does not promise
    return (matrix * v).sum(axis=1)


def feasible_mask(corpus: SubstituteCorpus, var_name: str, var_emb: np.ndarray, c: SearchConstraints) -> np.ndarray:
    """Boolean mask of records passing the similarity and length constraints."""
    mask = np.ones(len(corpus), dtype=bool)
    if not c.unlimited:
        sim = np.clip(_row_dot(corpus.embeddings, var_emb) / np.linalg.norm(var_emb), -1.0, 1.0)
        mask &= (1.0 - sim) < c.epsilon
        mask &= np.abs(corpus.lengths - len(var_name)) < c.delta
    return mask


def search_topk(
    seed: np.ndarray,
    corpus: SubstituteCorpus,
    var_name: str,
    var_emb: np.ndarray,
    c: SearchConstraints,
    exclude: Collection[str] = (),
) -> list[SubstituteRecord]:
    """The ``k`` feasible records most similar to ``seed`` (best first).

    ``exclude`` carries the names the caller has already tried plus every name
    that would collide with an identifier in the unit under attack.
    """
    if len(corpus) == 0:
        return []
    mask = feasible_mask(corpus, var_name, var_emb, c)
    for name in (var_name, *exclude):
        i = corpus._index.get(name)
        if i is not None:
            mask[i] = False
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    seed = np.asarray(seed, dtype=np.float64)
    norm = float(np.linalg.norm(seed))
    scores = _row_dot(corpus.embeddings[idx], seed)
    if norm > 0.0:
        scores = np.clip(scores / norm, -1.0, 1.0)
    else:
        scores = np.zeros_like(scores)
    # primary key: descending score; secondary: ascending row (= ascending name)
    order = np.lexsort((idx, -scores))[: c.k]
    return [corpus[int(i)] for i in idx[order]]

