"""Measure how anisotropic the built-in encoder is and how many corpus names
fall inside the similarity and length constraints around real variables.

    python scripts/encoder_probe.py --offsets 0.333 0.5 0.6 0.7
"""
import argparse

import numpy as np

from rnns.corpus import corpus_from_names, mine_names
from rnns.datasets import generate_dataset
from rnns.encoder import Encoder, EncoderConfig
from rnns.lexing import extract_variables
from rnns.nnsearch import SearchConstraints, feasible_mask


def probe(offset, names, variables, budget, c):
    enc = Encoder(EncoderConfig(offset=offset))
    corpus = corpus_from_names(names, "java", enc)
    rng = np.random.default_rng(0)
    rows = corpus.embeddings[rng.choice(len(corpus), size=min(400, len(corpus)), replace=False)]
    gram = rows @ rows.T
    pair = float(gram[np.triu_indices(len(rows), 1)].mean())
    counts = np.array([int(feasible_mask(corpus, v, enc.embed(v), c).sum()) for v in variables])
    return pair, counts, float((counts >= budget).mean())


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--offsets", type=float, nargs="+", default=[1 / 3, 0.5, 0.6, 0.7])
    p.add_argument("--seed", type=int, default=2)
    p.add_argument("--variables", type=int, default=200)
    args = p.parse_args(argv)
    public = generate_dataset(8, 400, "java", args.seed)
    names = sorted(mine_names(public, "java"))
    targets = generate_dataset(8, 25, "java", args.seed + 1)
    variables = sorted({v.name for u in targets for v in extract_variables(u)})[: args.variables]
    c = SearchConstraints()
    budget = 6 * c.k
    print(f"corpus {len(names)} names, {len(variables)} variables, candidate budget {budget}")
    print("offset | mean pair cos | median feasible | q10 feasible | share >= budget")
    for off in args.offsets:
        pair, counts, share = probe(off, names, variables, budget, c)
        print(f"{off:6.3f} | {pair:13.3f} | {int(np.median(counts)):15d} | {int(np.quantile(counts, 0.1)):12d} | "
              f"{100 * share:14.0f}%")


if __name__ == "__main__":
    main()
