"""Desk-scale comparative experiment: RNNS vs the random baseline vs RNNS-Unlimited.

One seed of the experiment:

1. generate a labeled dataset (``n_classes x per_class``) and split each class
   into ``train_per_class`` training samples and the rest as attack targets;
2. train the toy victim on the training split and measure clean accuracy on
   the attack targets;
3. mine a substitute corpus from a separately generated, larger unlabeled
   dataset (the stand-in for "public code");
4. attack every target with RNNS, the random baseline (same per-variable
   budget ``max_itr * k``) and RNNS with the constraints disabled.

Every random choice is derived from the seed, so reruns are identical.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .attack import AttackConfig, attack_dataset
from .corpus import SubstituteCorpus, corpus_from_names, mine_names
from .datasets import generate_dataset
from .encoder import Encoder
from .metrics import AttackReport
from .victim import TrainConfig, ToyModel, accuracy, train_toy


@dataclass(frozen=True)
class DeskConfig:
    lang: str = "java"
    n_classes: int = 8
    per_class: int = 100
    train_per_class: int = 75
    corpus_per_class: int = 400
    own_task_p: float = 0.6
    class_name_p: float = 0.75
    seeds: tuple[int, ...] = (0, 1, 2)
    attack: AttackConfig = field(default_factory=AttackConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class DeskSetup:
    seed: int
    train: list
    targets: list
    corpus: SubstituteCorpus
    model: ToyModel
    clean_accuracy: float


@dataclass
class SeedOutcome:
    seed: int
    clean_accuracy: float
    corpus_size: int
    reports: dict[str, AttackReport]
    seconds: float

    def asr(self, mode: str) -> float:
        return self.reports[mode].asr

    @property
    def rnns_beats_random(self) -> bool:
        return self.asr("rnns") >= self.asr("random")

    @property
    def unlimited_beats_rnns(self) -> bool:
        return self.asr("unlimited") >= self.asr("rnns")


def setup(seed: int, cfg: DeskConfig, encoder: Encoder | None = None) -> DeskSetup:
    gen = dict(own_task_p=cfg.own_task_p, class_name_p=cfg.class_name_p)
    data = generate_dataset(cfg.n_classes, cfg.per_class, cfg.lang, 1000 * seed + 1, **gen)
    train, targets = [], []
    for i, unit in enumerate(data):
        (train if i % cfg.per_class < cfg.train_per_class else targets).append(unit)
    model = train_toy(train, replace(cfg.train, seed=seed), n_classes=cfg.n_classes)
    public = generate_dataset(cfg.n_classes, cfg.corpus_per_class, cfg.lang, 1000 * seed + 2, **gen)
    corpus = corpus_from_names(mine_names(public, cfg.lang), cfg.lang, encoder)
    return DeskSetup(seed, train, targets, corpus, model, accuracy(model, targets))


MODES = ("rnns", "random", "unlimited")


def run_seed(seed: int, cfg: DeskConfig, encoder: Encoder | None = None, modes=MODES) -> SeedOutcome:
    encoder = encoder or Encoder()
    t0 = time.perf_counter()
    s = setup(seed, cfg, encoder)
    base = replace(cfg.attack, rng_seed=seed)
    unlimited = replace(base, constraints=replace(base.constraints, unlimited=True))
    plans = {
        "rnns": ("rnns", base),
        "random": ("random", base),
        "unlimited": ("rnns", unlimited),
    }
    reports = {}
    for mode in modes:
        attacker, acfg = plans[mode]
        reports[mode] = attack_dataset(s.targets, s.model, s.corpus, acfg, attacker=attacker, encoder=encoder)
    return SeedOutcome(seed, s.clean_accuracy, len(s.corpus), reports, time.perf_counter() - t0)


def run(cfg: DeskConfig, encoder: Encoder | None = None, modes=MODES) -> list[SeedOutcome]:
    return [run_seed(seed, cfg, encoder, modes) for seed in cfg.seeds]


def format_outcomes(outcomes: list[SeedOutcome]) -> str:
    lines = ["seed | acc    | corpus | mode      | eligible | ASR(%) | QT     | # replaced | flags"]
    for o in outcomes:
        flags = []
        if "random" in o.reports and not o.rnns_beats_random:
            flags.append("RNNS<random")
        if "unlimited" in o.reports and not o.unlimited_beats_rnns:
            flags.append("unlimited<RNNS (trend violated)")
        for mode, rep in o.reports.items():
            rc = "-" if rep.replaced_count is None else f"{rep.replaced_count.mean:.2f}"
            lines.append(f"{o.seed:4d} | {o.clean_accuracy:.4f} | {o.corpus_size:6d} | {mode:9s} | "
                         f"{rep.n_eligible:8d} | {100 * rep.asr:6.2f} | {rep.mean_qt:6.1f} | {rc:>10s} | "
                         + (", ".join(flags) if mode == MODES[0] else ""))
    return "\n".join(lines)

