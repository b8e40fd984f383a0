import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import cos, topk_oracle
from rnns.corpus import SubstituteRecord, corpus_from_names
from rnns.datasets import GENERIC, TOPICS
from rnns.encoder import Encoder, embed_name
from rnns.nnsearch import SearchConstraints, feasible, feasible_mask, search_topk

PAPER = SearchConstraints()


def test_paper_defaults():
    assert (PAPER.epsilon, PAPER.delta, PAPER.k, PAPER.unlimited) == (0.15, 4, 60, False)


def test_length_constraint_example():
    rec = SubstituteRecord("counterVariableLong", 19, embed_name("count"))
    assert not feasible(rec, "count", embed_name("count"), PAPER)


def test_identical_embedding_feasible_for_any_positive_epsilon():
    e = embed_name("count")
    for eps in (1e-9, 0.01, 0.15):
        assert feasible(SubstituteRecord("cnt_x", 5, e), "count", e, SearchConstraints(epsilon=eps))


def test_strict_inequalities():
    e = np.eye(8)[0]
    # cosine exactly 1 - epsilon sits on the boundary and is rejected
    on_edge = np.zeros(8)
    on_edge[:2] = [0.75, np.sqrt(1 - 0.75 ** 2)]
    c = SearchConstraints(epsilon=0.25, delta=2)
    assert not feasible(SubstituteRecord("ab", 2, on_edge), "a", e, c)
    assert not feasible(SubstituteRecord("abc", 3, e), "a", e, c)   # |3-1| = 2, not < 2
    assert feasible(SubstituteRecord("ab", 2, e), "a", e, c)


def test_unlimited_ignores_constraints_and_collisions_come_from_exclude():
    far = SubstituteRecord("completely_unrelated_name", 25, -embed_name("x"))
    assert feasible(far, "x", embed_name("x"), SearchConstraints(unlimited=True))
    corpus = corpus_from_names(["apple", "zebra_crossing_sign"], "python")
    out = search_topk(embed_name("x"), corpus, "x", embed_name("x"), SearchConstraints(unlimited=True),
                      exclude={"apple"})
    assert [r.name for r in out] == ["zebra_crossing_sign"]


def test_singleton_corpus():
    corpus = corpus_from_names(["counts"], "java")
    e = embed_name("count")
    assert [r.name for r in search_topk(e, corpus, "count", e, PAPER)] == ["counts"]


def test_seed_equal_to_record_ranks_it_first():
    names = ["price", "prices", "priceTag", "cost", "fee"]
    corpus = corpus_from_names(names, "java")
    var = embed_name("price")
    out = search_topk(embed_name("priceTag"), corpus, "price", var, SearchConstraints(unlimited=True))
    assert out[0].name == "priceTag"


def test_ties_broken_by_name():
    # mean pooling ignores subtoken order and casing style, so all three share
    # one embedding exactly
    corpus = corpus_from_names(["item_count", "itemCount", "countItem", "zz"], "java")
    seed = embed_name("itemCount")
    out = search_topk(seed, corpus, "q", seed, SearchConstraints(unlimited=True))
    assert [r.name for r in out] == ["countItem", "itemCount", "item_count", "zz"]


def test_zero_seed_orders_by_name():
    corpus = corpus_from_names(["b", "a", "c"], "c")
    out = search_topk(np.zeros(64), corpus, "q", embed_name("q"), SearchConstraints(unlimited=True))
    assert [r.name for r in out] == ["a", "b", "c"]


def _names(n):
    words = sorted({w for t in TOPICS for w in t} | set(GENERIC))
    out = []
    for a, b in itertools.product(words, words):
        if a != b:
            out.append(a + b[0].upper() + b[1:])
            out.append(a + "_" + b)
        if len(out) >= n:
            break
    return out[:n]


def test_feasible_fraction_matches_brute_force():
    corpus = corpus_from_names(_names(1000), "java")
    for var in ["count", "priceTmp", "x"]:
        e = embed_name(var)
        mask = feasible_mask(corpus, var, e, PAPER)
        brute = [abs(len(n) - len(var)) < 4 and 1 - cos(list(r), list(e)) < 0.15
                 for n, r in zip(corpus.names, corpus.embeddings)]
        assert mask.tolist() == brute


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 5, 60]), st.floats(0.02, 0.5))
def test_search_agrees_with_oracle_small(seed, k, eps):
    corpus = _SMALL
    rng = np.random.default_rng(seed)
    var = corpus.names[rng.integers(len(corpus))]
    var_emb = Encoder().embed(var)
    q = var_emb + rng.normal(0, 0.3, size=var_emb.shape)
    exclude = {corpus.names[i] for i in rng.integers(len(corpus), size=5)}
    c = SearchConstraints(epsilon=eps, delta=4, k=k)
    got = [r.name for r in search_topk(q, corpus, var, var_emb, c, exclude)]
    assert got == topk_oracle(q, corpus.names, corpus.embeddings, var, var_emb, eps, 4, k, exclude=exclude)
    # output is a prefix of the feasible set in non-increasing similarity
    sims = [cos(list(corpus[corpus.index(n)].embedding), list(q)) for n in got]
    assert all(a >= b for a, b in zip(sims, sims[1:]))


_SMALL = corpus_from_names(_names(800), "java")
