"""The RNNS attack loop, uncertainty-based variable ranking, and a
random-substitution baseline sharing the same outer loop.

Per sample:

1. query the victim on the original program (eligibility check);
2. rank the variables by uncertainty, estimated from probe renamings;
3. for each variable, run ``max_itr`` rounds; each round proposes a batch of
   substitutes (RNNS: top-k around a seed predicted from the history of
   accepted substitutes; baseline: uniform draws), renames the current best
   program with each, and keeps a candidate whenever the ground-truth
   probability reaches a new minimum.  The first label flip ends the attack.

Accepted renames persist across variables, as does the probability minimum.
"""
from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .corpus import SubstituteCorpus
from .encoder import Encoder
from .lexing import LANGUAGES, SourceUnit, extract_variables, identifier_names, is_valid_identifier, rename
from .nnsearch import SearchConstraints, search_topk
from .victim import Probabilities, Victim, counted

log = logging.getLogger(__name__)

ATTACKERS = ("rnns", "random")


@dataclass(frozen=True)
class AttackConfig:
    max_itr: int = 6
    alpha: float = 0.2
    constraints: SearchConstraints = field(default_factory=SearchConstraints)
    var_array_size: int = 16
    var_array_lengths: tuple[int, int] = (1, 5)
    rng_seed: int = 0
    count_uncertainty_queries: bool = True

    def __post_init__(self):
        if self.max_itr < 1:
            raise ValueError("max_itr must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        lo, hi = self.var_array_lengths
        if not 1 <= lo <= hi:
            raise ValueError("var_array_lengths must be a range 1 <= lo <= hi")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["var_array_lengths"] = list(self.var_array_lengths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttackConfig":
        d = dict(d)
        d["constraints"] = SearchConstraints(**d["constraints"])
        d["var_array_lengths"] = tuple(d["var_array_lengths"])
        return cls(**d)


class Step(NamedTuple):
    variable: str
    substitute: str
    prob_y: float
    predicted: int
    accepted: bool


@dataclass
class AttackState:
    """Loop state for the variable currently under attack."""
    variable: str
    var_emb: np.ndarray
    sub_pre: str
    sub_cur: str
    delta_e_smo: np.ndarray
    tried: set[str] = field(default_factory=set)


@dataclass
class AttackResult:
    original: SourceUnit
    adversarial: SourceUnit
    success: bool
    eligible: bool
    queries: int
    uncertainty_queries: int = 0
    original_probs: tuple[float, ...] = ()
    replaced: list[tuple[str, str]] = field(default_factory=list)
    transcript: list[Step] = field(default_factory=list)
    ranking: list[tuple[str, float]] = field(default_factory=list)
    probes: dict[str, list[tuple[str, tuple[float, ...]]]] = field(default_factory=dict)

    @property
    def mapping(self) -> dict[str, str]:
        return dict(self.replaced)

    def to_dict(self) -> dict:
        return {
            "original": {"code": self.original.code, "lang": self.original.language, "label": self.original.label},
            "adversarial": self.adversarial.code,
            "success": self.success,
            "eligible": self.eligible,
            "queries": self.queries,
            "uncertainty_queries": self.uncertainty_queries,
            "original_probs": list(self.original_probs),
            "replaced": [list(p) for p in self.replaced],
            "transcript": [list(s) for s in self.transcript],
            "ranking": [list(r) for r in self.ranking],
            "probes": {v: [[w, list(p)] for w, p in ps] for v, ps in self.probes.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttackResult":
        o = d["original"]
        original = SourceUnit(o["code"], o["lang"], o["label"])
        return cls(
            original=original,
            adversarial=original.with_code(d["adversarial"]),
            success=d["success"],
            eligible=d["eligible"],
            queries=d["queries"],
            uncertainty_queries=d["uncertainty_queries"],
            original_probs=tuple(d["original_probs"]),
            replaced=[tuple(p) for p in d["replaced"]],
            transcript=[Step(*s) for s in d["transcript"]],
            ranking=[tuple(r) for r in d["ranking"]],
            probes={v: [(w, tuple(p)) for w, p in ps] for v, ps in d["probes"].items()},
        )


# --- uncertainty ---------------------------------------------------------------

def make_var_array(cfg: AttackConfig) -> list[str]:
    """``var_array_size`` distinct random lowercase names whose lengths cycle
    through ``var_array_lengths``; valid identifiers in every supported language."""
    if cfg.var_array_size <= 0:
        raise ValueError("var_array_size must be positive")
    rng = random.Random(cfg.rng_seed)
    lo, hi = cfg.var_array_lengths
    lengths = list(range(lo, hi + 1))
    names: list[str] = []
    attempts = 0
    while len(names) < cfg.var_array_size:
        attempts += 1
        if attempts > 1000 * cfg.var_array_size:
            raise ValueError("cannot draw enough distinct probe names for this length range")
        size = lengths[len(names) % len(lengths)]
        name = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(size))
        if name in names or not all(is_valid_identifier(name, lang) for lang in LANGUAGES):
            continue
        names.append(name)
    return names


def probe_variable(unit: SourceUnit, var: str, victim: Victim, var_array: Sequence[str]):
    """Classify one mutant per probe name (colliding probes are skipped)."""
    taken = identifier_names(unit)
    out = []
    for w in var_array:
        if w in taken:
            continue
        out.append((w, victim.classify(rename(unit, var, w).unit).probs))
    return out


def uncertainty_from_probes(probes) -> float:
    """Mean over labels of the population standard deviation of that label's
    probability across the probe mutants."""
    if not probes:
        return 0.0
    P = np.array([p for _, p in probes], dtype=np.float64)
    # std is shift-invariant; shifting by the first row makes a constant column exactly 0
    return float((P - P[0]).std(axis=0).mean())


def uncertainty(unit: SourceUnit, var: str, victim: Victim, cfg: AttackConfig,
                var_array: Sequence[str] | None = None) -> float:
    probes = probe_variable(unit, var, victim, var_array or make_var_array(cfg))
    if not probes:
        log.warning("every probe name collides in the unit; uncertainty of %r set to 0", var)
    return uncertainty_from_probes(probes)


def rank_variables(unit: SourceUnit, victim: Victim, cfg: AttackConfig, var_array: Sequence[str] | None = None):
    """Variables by descending uncertainty; ties keep first-occurrence order.

    Returns ``(ranking, probes)`` with ``ranking`` a list of (name, uncertainty).
    """
    var_array = var_array or make_var_array(cfg)
    scored, probes = [], {}
    for var in extract_variables(unit):
        p = probe_variable(unit, var.name, victim, var_array)
        probes[var.name] = p
        scored.append((var.name, uncertainty_from_probes(p)))
    return sorted(scored, key=lambda t: -t[1]), probes


# --- seed prediction -----------------------------------------------------------

def predict_seed(sub_pre: str, sub_cur: str, delta_e_smo: np.ndarray, alpha: float, encoder: Encoder):
    """Returns ``(e_seed, new_delta_e_smo)``; the seed is not re-normalized."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    e_cur = encoder.embed(sub_cur)
    delta_e = e_cur - encoder.embed(sub_pre)
    smo = (1.0 - alpha) * delta_e_smo + alpha * delta_e
    return e_cur + smo, smo


# --- attack loop ---------------------------------------------------------------

Proposer = Callable[[AttackState, SourceUnit], list[str]]


def _run(unit: SourceUnit, victim: Victim, cfg: AttackConfig, encoder: Encoder, propose: Proposer,
         original: Probabilities | None) -> AttackResult:
    if unit.label is None:
        raise ValueError("attack target needs a ground-truth label")
    y = unit.label
    query = counted(victim)
    if original is None:
        original = query.classify(unit)
    result = AttackResult(unit, unit, False, True, 0, original_probs=original.probs)
    if original.predicted != y:
        result.eligible = False
        result.queries = query.count
        return result

    probe_victim = counted(victim)
    result.ranking, result.probes = rank_variables(unit, probe_victim, cfg)
    result.uncertainty_queries = probe_victim.count

    def finish(success: bool, adversarial: SourceUnit) -> AttackResult:
        result.success = success
        result.adversarial = adversarial
        result.queries = query.count + (result.uncertainty_queries if cfg.count_uncertainty_queries else 0)
        return result

    x_best = unit
    prob_min = 1.0
    for var, _ in result.ranking:
        var_emb = encoder.embed(var)
        state = AttackState(var, var_emb, var, var, np.zeros_like(var_emb))
        for _ in range(cfg.max_itr):
            for sub in propose(state, x_best):
                state.tried.add(sub)
                x_tmp = rename(x_best, state.sub_cur, sub).unit
                probs = query.classify(x_tmp)
                prob_y = probs.probs[y]
                accepted = prob_y < prob_min
                if accepted:
                    x_best = x_tmp
                    state.sub_pre, state.sub_cur = state.sub_cur, sub
                    prob_min = prob_y
                result.transcript.append(Step(var, sub, prob_y, probs.predicted, accepted))
                if probs.predicted != y:
                    # the flipping candidate is returned even if it was not a new minimum
                    result.replaced.append((var, sub))
                    return finish(True, x_tmp)
        if state.sub_cur != var:
            result.replaced.append((var, state.sub_cur))
    return finish(False, x_best)


def attack_one(unit: SourceUnit, victim: Victim, corpus: SubstituteCorpus, cfg: AttackConfig,
               encoder: Encoder | None = None, original: Probabilities | None = None) -> AttackResult:
    """RNNS on one labeled sample."""
    encoder = encoder or Encoder()
    c = cfg.constraints

    def propose(state: AttackState, x_best: SourceUnit) -> list[str]:
        seed, state.delta_e_smo = predict_seed(state.sub_pre, state.sub_cur, state.delta_e_smo, cfg.alpha, encoder)
        exclude = state.tried | identifier_names(x_best)
        return [r.name for r in search_topk(seed, corpus, state.variable, state.var_emb, c, exclude)]

    return _run(unit, victim, cfg, encoder, propose, original)


def sample_rng(cfg: AttackConfig, sample_index: int) -> np.random.Generator:
    return np.random.default_rng([cfg.rng_seed, sample_index])


def attack_random_baseline(unit: SourceUnit, victim: Victim, corpus: SubstituteCorpus, cfg: AttackConfig,
                           sample_index: int = 0, encoder: Encoder | None = None,
                           original: Probabilities | None = None) -> AttackResult:
    """Same loop, but each round draws ``k`` untried corpus names uniformly at
    random (no similarity or length constraint), so the per-variable budget is
    ``max_itr * k`` as for RNNS."""
    encoder = encoder or Encoder()
    rng = sample_rng(cfg, sample_index)
    k = cfg.constraints.k
    orders: dict[str, tuple[np.ndarray, list[int]]] = {}

    def propose(state: AttackState, x_best: SourceUnit) -> list[str]:
        if state.variable not in orders:
            orders[state.variable] = (rng.permutation(len(corpus)), [0])
        perm, cursor = orders[state.variable]
        taken = identifier_names(x_best)
        out = []
        while len(out) < k and cursor[0] < len(perm):
            name = corpus.names[perm[cursor[0]]]
            cursor[0] += 1
            if name == state.variable or name in taken or name in state.tried:
                continue
            out.append(name)
        return out

    return _run(unit, victim, cfg, encoder, propose, original)


def attack_dataset(dataset: Sequence[SourceUnit], victim: Victim, corpus: SubstituteCorpus, cfg: AttackConfig,
                   attacker: str = "rnns", encoder: Encoder | None = None, jobs: int = 1):
    """Attack every sample; returns an ``AttackReport`` with results in input order."""
    from .metrics import aggregate

    if attacker not in ATTACKERS:
        raise ValueError(f"unknown attacker {attacker!r}")
    encoder = encoder or Encoder()

    def one(i: int) -> AttackResult:
        if attacker == "rnns":
            return attack_one(dataset[i], victim, corpus, cfg, encoder)
        return attack_random_baseline(dataset[i], victim, corpus, cfg, sample_index=i, encoder=encoder)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(len(dataset))))
    else:
        results = [one(i) for i in range(len(dataset))]
    corpus_info = {"size": len(corpus), "language": corpus.language, "fingerprint": corpus.fingerprint}
    return aggregate(results, attacker=attacker, config=cfg.to_dict(), corpus=corpus_info)
