"""Attack outcome aggregation: ASR, query counts and perturbation statistics.

Report schema (``schema_version`` 1):

* ``asr`` = successes / eligible; eligible samples are those the victim
  classified correctly before the attack.
* ``mean_qt`` averages queries over all eligible samples; ``mean_qt_success``
  and ``mean_qt_failure`` split it by outcome.
* ``length_diff`` is the (mean, population variance) of ``|len(sub) - len(var)|``
  over every replaced pair of every successful attack; ``replaced_count`` is
  the (mean, population variance) of the number of replaced variables per
  successful attack.  Both are ``null`` when nothing succeeded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attack import AttackResult

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Stat:
    mean: float
    variance: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "Stat | None":
        if len(values) == 0:
            return None
        arr = np.asarray(values, dtype=np.float64)
        return cls(float(arr.mean()), float(arr.var()))


@dataclass
class AttackReport:
    results: list[AttackResult]
    attacker: str = "rnns"
    config: dict = field(default_factory=dict)
    corpus: dict = field(default_factory=dict)
    manifest: dict | None = None
    n_samples: int = 0
    n_eligible: int = 0
    n_success: int = 0
    asr: float | None = None
    mean_qt: float | None = None
    mean_qt_success: float | None = None
    mean_qt_failure: float | None = None
    length_diff: Stat | None = None
    replaced_count: Stat | None = None
    var_len: float | None = None
    adv_var_len: float | None = None

    def summary(self) -> dict:
        def stat(s):
            return None if s is None else {"mean": s.mean, "variance": s.variance}

        return {
            "attacker": self.attacker,
            "n_samples": self.n_samples,
            "n_eligible": self.n_eligible,
            "n_success": self.n_success,
            "asr": self.asr,
            "mean_qt": self.mean_qt,
            "mean_qt_success": self.mean_qt_success,
            "mean_qt_failure": self.mean_qt_failure,
            "length_diff": stat(self.length_diff),
            "replaced_count": stat(self.replaced_count),
            "var_len": self.var_len,
            "adv_var_len": self.adv_var_len,
        }

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "variance": "population",
            "qt_average": "all eligible samples",
            "summary": self.summary(),
            "config": self.config,
            "corpus": self.corpus,
            "manifest": self.manifest,
            "results": [r.to_dict() for r in self.results],
        }


def _mean(values) -> float | None:
    return float(np.mean(values)) if len(values) else None


def aggregate(results: Sequence[AttackResult], attacker: str = "rnns", config: dict | None = None,
              corpus: dict | None = None, manifest: dict | None = None) -> AttackReport:
    eligible = [r for r in results if r.eligible]
    wins = [r for r in eligible if r.success]
    losses = [r for r in eligible if not r.success]
    pairs = [(v, s) for r in wins for v, s in r.replaced]
    return AttackReport(
        results=list(results),
        attacker=attacker,
        config=dict(config or {}),
        corpus=dict(corpus or {}),
        manifest=manifest,
        n_samples=len(results),
        n_eligible=len(eligible),
        n_success=len(wins),
        asr=len(wins) / len(eligible) if eligible else None,
        mean_qt=_mean([r.queries for r in eligible]),
        mean_qt_success=_mean([r.queries for r in wins]),
        mean_qt_failure=_mean([r.queries for r in losses]),
        length_diff=Stat.of([abs(len(s) - len(v)) for v, s in pairs]),
        replaced_count=Stat.of([len(r.replaced) for r in wins]),
        var_len=_mean([len(v) for v, _ in pairs]),
        adv_var_len=_mean([len(s) for _, s in pairs]),
    )


def report_from_dict(d: dict) -> AttackReport:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
    results = [AttackResult.from_dict(r) for r in d["results"]]
    return aggregate(results, attacker=d["summary"]["attacker"], config=d["config"], corpus=d["corpus"],
                     manifest=d.get("manifest"))


def load_report(path) -> AttackReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def _fmt(x, digits=2):
    return "-" if x is None else f"{x:.{digits}f}"


def _fmt_stat(s: Stat | None) -> str:
    return "-" if s is None else f"{s.mean:.2f} ± {s.variance:.2f}"


def render(report: AttackReport, fmt: str = "table") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    header = ["Attacker", "Samples", "Eligible", "ASR(%)", "QT", "Var Len", "Adv Var Len", "Difference",
              "# Replaced"]
    row = [
        report.attacker,
        str(report.n_samples),
        str(report.n_eligible),
        _fmt(None if report.asr is None else 100 * report.asr),
        _fmt(report.mean_qt),
        _fmt(report.var_len),
        _fmt(report.adv_var_len),
        _fmt_stat(report.length_diff),
        _fmt_stat(report.replaced_count),
    ]
    widths = [max(len(h), len(c)) for h, c in zip(header, row)]
    lines = [
        " | ".join(h.ljust(w) for h, w in zip(header, widths)),
        "-+-".join("-" * w for w in widths),
        " | ".join(c.ljust(w) for c, w in zip(row, widths)),
    ]
    return "\n".join(lines) + "\n"
