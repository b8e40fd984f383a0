import json

import pytest

from oracles import population_stats
from rnns.attack import AttackResult
from rnns.lexing import SourceUnit
from rnns.metrics import Stat, aggregate, load_report, render, report_from_dict


def result(replaced, success, queries, eligible=True):
    u = SourceUnit("a = 1", "python", 0)
    return AttackResult(u, u, success, eligible, queries, replaced=list(replaced))


def hand_fixture():
    return [
        result([("a", "hh"), ("count", "cnt")], True, 10),
        result([("x", "xy")], True, 20),
        result([("total", "sum")], False, 30),
        result([], False, 1, eligible=False),
    ]


def test_three_sample_hand_computation():
    rep = aggregate(hand_fixture())
    # |2-1|, |3-5|, |2-1| over the two successes -> mean 4/3, population variance 2/9
    assert rep.asr == pytest.approx(2 / 3, abs=1e-9)
    assert rep.mean_qt == pytest.approx(20.0, abs=1e-9)
    assert rep.mean_qt_success == pytest.approx(15.0, abs=1e-9)
    assert rep.mean_qt_failure == pytest.approx(30.0, abs=1e-9)
    assert rep.length_diff.mean == pytest.approx(4 / 3, abs=1e-9)
    assert rep.length_diff.variance == pytest.approx(2 / 9, abs=1e-9)
    assert rep.replaced_count.mean == pytest.approx(1.5, abs=1e-9)
    assert rep.replaced_count.variance == pytest.approx(0.25, abs=1e-9)
    assert rep.var_len == pytest.approx(7 / 3, abs=1e-9)
    assert rep.adv_var_len == pytest.approx(7 / 3, abs=1e-9)
    assert (rep.n_samples, rep.n_eligible, rep.n_success) == (4, 3, 2)


def test_asr_example_and_trivial_length_diff():
    rs = [result([("a", "h")], True, 5)] * 3 + [result([], False, 5)] * 7
    rep = aggregate(rs)
    assert rep.asr == pytest.approx(0.3)
    assert rep.length_diff == Stat(0.0, 0.0)


def test_no_success_gives_null_statistics():
    rep = aggregate([result([("a", "b")], False, 4)])
    assert rep.asr == 0.0 and rep.length_diff is None and rep.replaced_count is None
    assert rep.summary()["length_diff"] is None
    empty = aggregate([])
    assert empty.asr is None and empty.mean_qt is None


def test_stats_recomputed_from_transcripts(small_model, small_data, small_corpus):
    from rnns.attack import AttackConfig, attack_dataset

    rep = attack_dataset(small_data[:16], small_model, small_corpus, AttackConfig(max_itr=2))
    wins = [r for r in rep.results if r.eligible and r.success]
    diffs = [abs(len(s) - len(v)) for r in wins for v, s in r.replaced]
    counts = [len(r.replaced) for r in wins]
    if wins:
        assert rep.length_diff.mean == pytest.approx(population_stats(diffs)[0], abs=1e-9)
        assert rep.length_diff.variance == pytest.approx(population_stats(diffs)[1], abs=1e-9)
        assert rep.replaced_count.variance == pytest.approx(population_stats(counts)[1], abs=1e-9)
    assert 0.0 <= rep.asr <= 1.0 and rep.mean_qt >= 1


def test_json_round_trip_is_idempotent(tmp_path):
    rep = aggregate(hand_fixture(), attacker="random", config={"k": 60}, corpus={"size": 3})
    text = render(rep, "json")
    doc = json.loads(text)
    assert doc["schema_version"] == 1 and doc["variance"] == "population"
    again = report_from_dict(doc)
    assert render(again, "json") == text
    path = tmp_path / "r.json"
    path.write_text(text)
    assert render(load_report(path), "json") == text
    doc["schema_version"] = 99
    with pytest.raises(ValueError):
        report_from_dict(doc)


def test_table_mirrors_paper_columns():
    lines = render(aggregate(hand_fixture()), "table").splitlines()
    assert [c.strip() for c in lines[0].split("|")] == [
        "Attacker", "Samples", "Eligible", "ASR(%)", "QT", "Var Len", "Adv Var Len", "Difference", "# Replaced"]
    row = [c.strip() for c in lines[2].split("|")]
    assert row[3] == "66.67" and row[4] == "20.00" and row[7] == "1.33 ± 0.22" and row[8] == "1.50 ± 0.25"
    with pytest.raises(ValueError):
        render(aggregate([]), "xml")
