"""The ten acceptance criteria, one test each.

Every test records a single ``PASS``/``FAIL criterion N`` line (printed
immediately and repeated in the terminal summary) before asserting.
"""
import json
import threading
import time

import numpy as np
import pytest

from conftest import CRITERIA
from golden import CONFIG, GOLDEN, digest, fixture
from oracles import ScanIndex, seed_recurrence, transcript_violations
from rnns.attack import AttackConfig, attack_dataset, attack_one, predict_seed
from rnns.cli import main
from rnns.corpus import corpus_from_names, dumps_corpus
from rnns.encoder import Encoder
from rnns.experiment import DeskConfig, format_outcomes, run, setup
from rnns.lexing import alpha_equivalent, extract_variables
from rnns.metrics import aggregate
from rnns.nnsearch import SearchConstraints, search_topk
from rnns.victim import counted, dumps_model, http_classify, make_server, resolve_victim
from test_metrics import hand_fixture
from test_nnsearch import _names
from test_victim import central_difference_check


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    CRITERIA[n] = line
    print(line)


@pytest.fixture(scope="module")
def desk():
    cfg = DeskConfig()
    t0 = time.perf_counter()
    outcomes = run(cfg)
    seconds = time.perf_counter() - t0
    print(format_outcomes(outcomes))
    return cfg, outcomes, seconds


def test_criterion_01_exact_topk_against_exhaustive_scan():
    corpus = corpus_from_names(_names(10_000), "java")
    index = ScanIndex(corpus.names, corpus.embeddings)
    rng = np.random.default_rng(2024)
    c = SearchConstraints(epsilon=0.15, delta=4, k=60)
    mismatches, search_seconds, sizes = 0, 0.0, []
    t0 = time.perf_counter()
    for trial in range(100):
        var = corpus.names[int(rng.integers(len(corpus)))]
        var_emb = corpus.embeddings[corpus.index(var)]
        kind = trial % 4
        if kind == 0:      # near the variable
            seed = var_emb + rng.normal(0, 0.3, size=var_emb.shape)
        elif kind == 1:    # anywhere
            seed = rng.normal(size=var_emb.shape)
        elif kind == 2:    # exactly a corpus row, so ties with its duplicates
            seed = corpus.embeddings[int(rng.integers(len(corpus)))].copy()
        else:              # extrapolated past the variable, as predicted seeds are
            other = corpus.embeddings[int(rng.integers(len(corpus)))]
            seed = var_emb + 1.5 * (other - var_emb)
        s0 = time.perf_counter()
        got = [r.name for r in search_topk(seed, corpus, var, var_emb, c)]
        search_seconds += time.perf_counter() - s0
        want = index.topk(seed, var, var_emb, 0.15, 4, 60)
        sizes.append(len(want))
        mismatches += got != want
    total = time.perf_counter() - t0
    ok = mismatches == 0 and total < 60
    verdict(1, ok, f"{100 - mismatches}/100 seeds identical to the scan oracle over {len(corpus)} records "
                   f"(median result size {int(np.median(sizes))}); search {search_seconds:.2f}s, total {total:.1f}s")
    assert mismatches == 0
    assert total < 60


def test_criterion_02_golden_transcript():
    frozen = json.loads(GOLDEN.read_text())
    target, model, corpus = fixture()
    problems = []
    if digest(dumps_model(model)) != frozen["model_sha256"] or digest(dumps_corpus(corpus)) != frozen["corpus_sha256"]:
        problems.append("fixture drifted")
    v = counted(model)
    before = v.count
    r = attack_one(target, v, corpus, CONFIG)
    got = [list(s) for s in r.transcript]
    if [s[:2] + s[3:] for s in got] != [s[:2] + s[3:] for s in frozen["transcript"]]:
        problems.append("transcript differs")
    elif max(abs(a[2] - b[2]) for a, b in zip(got, frozen["transcript"])) > 1e-12:
        problems.append("probabilities differ")
    if (r.success, r.queries, [list(p) for p in r.replaced]) != (frozen["success"], frozen["queries"], frozen["replaced"]):
        problems.append("outcome differs")
    if r.queries != v.count - before:
        problems.append(f"queries {r.queries} != counter delta {v.count - before}")
    problems += transcript_violations(r, len(extract_variables(target)), CONFIG.max_itr, CONFIG.constraints.k)
    verdict(2, not problems, f"{len(r.transcript)} steps, {r.queries} queries, "
                             f"{'invariants hold' if not problems else '; '.join(problems)}")
    assert not problems


def test_criterion_03_seed_prediction_arithmetic():
    rng = np.random.default_rng(7)
    worst, steps = 0.0, 0
    for _ in range(10):
        alpha = float(rng.uniform(0, 1))
        d = int(rng.integers(2, 80))
        chain = [rng.normal(size=d) for _ in range(101)]

        class Table:
            def embed(self, name):
                return chain[int(name)]

        expected = seed_recurrence([list(c) for c in chain], alpha, d)
        smo = np.zeros(d)
        for i in range(1, len(chain)):
            e_seed, smo = predict_seed(str(i - 1), str(i), smo, alpha, Table())
            worst = max(worst, float(np.abs(e_seed - expected[i - 1][0]).max()),
                        float(np.abs(smo - expected[i - 1][1]).max()))
            steps += 1
    enc = Encoder()
    ident, ident_smo = predict_seed("count", "count", np.zeros(64), 0.2, enc)
    identity = ident.tobytes() == enc.embed("count").tobytes() and not ident_smo.any()
    ok = steps == 1000 and worst <= 1e-12 and identity
    verdict(3, ok, f"{steps} steps, max abs error {worst:.1e}; identity case exact: {identity}")
    assert steps == 1000 and worst <= 1e-12 and identity


def test_criterion_04_every_success_is_sound(desk):
    cfg, outcomes, _ = desk
    checked, bad = 0, []
    for o in outcomes:
        model = setup(o.seed, cfg).model   # deterministic, so this is the attacked victim
        for mode, rep in o.reports.items():
            for r in rep.results:
                if not r.success:
                    continue
                checked += 1
                if model.classify(r.adversarial).predicted == r.original.label:
                    bad.append(f"seed {o.seed} {mode}: label not flipped")
                if not alpha_equivalent(r.original, r.adversarial, r.mapping):
                    bad.append(f"seed {o.seed} {mode}: not alpha-equivalent")
    verdict(4, checked > 0 and not bad, f"{checked} successes re-checked across {len(outcomes)} seeds, "
                                        f"{len(bad)} unsound")
    assert checked > 0 and not bad, bad[:5]


def test_criterion_05_rnns_at_least_random(desk):
    cfg, outcomes, seconds = desk
    rnns = [o.asr("rnns") for o in outcomes]
    rand = [o.asr("random") for o in outcomes]
    setting_ok = all(o.clean_accuracy >= 0.9 and o.corpus_size >= 5000 for o in outcomes)
    per_seed = ", ".join(f"seed {o.seed}: {100 * a:.2f}% vs {100 * b:.2f}%{' (RNNS<random)' if a < b else ''}"
                         for o, a, b in zip(outcomes, rnns, rand))
    ok = setting_ok and float(np.mean(rnns)) >= float(np.mean(rand)) and seconds < 600
    verdict(5, ok, f"mean ASR RNNS {100 * np.mean(rnns):.2f}% vs random {100 * np.mean(rand):.2f}% "
                   f"[{per_seed}]; {seconds:.0f}s")
    assert setting_ok, "desk setting below the required victim accuracy or corpus size"
    assert cfg.attack.max_itr * cfg.attack.constraints.k > 0
    assert seconds < 600
    assert float(np.mean(rnns)) >= float(np.mean(rand))


def test_criterion_06_unlimited_ablation_reported(desk):
    _, outcomes, _ = desk
    ran = all({"rnns", "unlimited"} <= set(o.reports) and o.reports["unlimited"].asr is not None for o in outcomes)
    violations = [o.seed for o in outcomes if not o.unlimited_beats_rnns]
    per_seed = ", ".join(f"seed {o.seed}: {100 * o.asr('unlimited'):.2f}% vs {100 * o.asr('rnns'):.2f}%"
                         for o in outcomes)
    flag = f"; trend violated on seeds {violations}" if violations else "; trend holds on every seed"
    verdict(6, ran, f"unlimited vs constrained ASR [{per_seed}]{flag}")
    assert ran


def test_criterion_07_perturbation_statistics():
    rep = aggregate(hand_fixture())
    expected = {"length_diff.mean": 4 / 3, "length_diff.variance": 2 / 9,
                "replaced_count.mean": 1.5, "replaced_count.variance": 0.25}
    got = {"length_diff.mean": rep.length_diff.mean, "length_diff.variance": rep.length_diff.variance,
           "replaced_count.mean": rep.replaced_count.mean, "replaced_count.variance": rep.replaced_count.variance}
    worst = max(abs(got[k] - expected[k]) for k in expected)
    verdict(7, worst <= 1e-9, f"max deviation from the hand computation {worst:.1e}")
    assert worst <= 1e-9


def test_criterion_08_gradient_check():
    errors = [central_difference_check(seed=s) for s in range(5)]
    verdict(8, max(errors) < 1e-4, f"max relative error {max(errors):.1e} over 5 random problems")
    assert max(errors) < 1e-4


def _cli_run(workdir, monkeypatch):
    monkeypatch.chdir(workdir)
    steps = [
        ["datagen", "--classes", "3", "--per-class", "12", "--seed", "1", "--out", "data.jsonl"],
        ["datagen", "--classes", "3", "--per-class", "40", "--seed", "2", "--out", "public.jsonl"],
        ["corpus-build", "--lang", "java", "--input", "public.jsonl", "--out", "corpus.jsonl"],
        ["victim-train", "--data", "data.jsonl", "--out", "model.json", "--epochs", "150"],
        ["attack", "--dataset", "data.jsonl", "--corpus", "corpus.jsonl", "--victim", "toy:model.json",
         "--out", "report.json"],
    ]
    for argv in steps:
        assert main(argv) == 0, argv


def test_criterion_09_cli_determinism(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    _cli_run(a, monkeypatch)
    _cli_run(b, monkeypatch)
    files = ["corpus.jsonl", "report.json", "corpus.jsonl.manifest.json", "report.json.manifest.json"]
    differ = [f for f in files if (a / f).read_bytes() != (b / f).read_bytes()]
    verdict(9, not differ, "two end-to-end CLI runs: " + ("corpus and report byte-identical" if not differ
                                                          else f"differ in {differ}"))
    assert not differ


def test_criterion_10_wire_protocol(small_model, small_data, small_corpus):
    srv = make_server(small_model)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{srv.server_address[1]}"
    try:
        worst = max(float(np.abs(np.array(http_classify(url, u).probs) - small_model.classify(u).probs).max())
                    for u in small_data)
        cfg = AttackConfig(rng_seed=3)
        targets = small_data[::5]
        local = attack_dataset(targets, small_model, small_corpus, cfg)
        remote = attack_dataset(targets, resolve_victim("http:" + url), small_corpus, cfg)
    finally:
        srv.shutdown()
        srv.server_close()
    same = [a.to_dict() == b.to_dict() for a, b in zip(local.results, remote.results)]
    ok = worst <= 1e-9 and all(same)
    verdict(10, ok, f"max |http - in-process| {worst:.1e} over {len(small_data)} programs; "
                    f"{sum(same)}/{len(same)} transcripts identical via http: and toy:")
    assert worst <= 1e-9 and all(same)
