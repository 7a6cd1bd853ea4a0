import json
import math

import numpy as np
import pytest

from oracles import exp1_as_pieces
from pmaccel.cross_entropy import CEConfig
from pmaccel.estimation import StoppingRule, crude_mc, crude_sample_size, is_estimate
from pmaccel.harness import METHODS, compare_harness, derived_seed
from pmaccel.problems import BernoulliProblem, TailProblem

TOY = TailProblem(exp1_as_pieces(), 4.0)
RULE = StoppingRule(cadence=10, min_samples=100)


@pytest.fixture(scope="module")
def toy_table():
    return compare_harness(TOY, repeats=5, rule=RULE, seed=1)


def test_rows_and_ratios(toy_table):
    assert [r.method for r in toy_table.rows] == list(METHODS)
    assert toy_table.row("piecewise").ratio == 1.0
    for r in toy_table.rows:
        assert r.error is None and len(r.runs) == 5
        assert r.ratio == pytest.approx(r.n_mean / toy_table.row("piecewise").n_mean, rel=1e-15)
    assert toy_table.row("crude").ratio > 10


def test_tuning_is_reported_separately(toy_table):
    pw = toy_table.row("piecewise")
    assert pw.ce is not None and pw.ce.reached
    assert toy_table.row("crude").ce is None
    assert all(r.n_samples < pw.ce.samples_used for r in pw.runs)


def test_repeats_use_common_random_numbers(toy_table):
    crude = toy_table.row("crude")
    for r, run in enumerate(crude.runs):
        again = crude_mc(TOY, RULE, derived_seed(1, r))
        assert np.array_equal(run.trace, again.trace)
    pw = toy_table.row("piecewise")
    again = is_estimate(TOY, pw.ce.proposal, RULE, derived_seed(1, 0))
    assert again.estimate == pw.runs[0].estimate


def test_outputs(toy_table):
    doc = json.loads(json.dumps(toy_table.to_dict()))
    assert doc["columns"] == ["N", "ratio"] and len(doc["rows"]) == 3
    assert "tuning" in doc["rows"][0] and "tuning" not in doc["rows"][2]
    text = toy_table.to_text()
    assert "Piecewise" in text and "Crude" in text
    lines = toy_table.traces_csv().splitlines()
    assert lines[0] == "method,repeat,n,estimate,rel_half_width"
    assert len(lines) == 1 + sum(len(run.trace) for r in toy_table.rows for run in r.runs)


def test_crude_mean_sample_size_matches_formula():
    # min_samples is lowered below the formula value so the rule, not the floor, decides
    p = 0.01
    table = compare_harness(BernoulliProblem(p), methods=("crude",), repeats=100,
                            rule=StoppingRule(cadence=1, min_samples=20), seed=2)
    row = table.row("crude")
    assert abs(row.n_mean / crude_sample_size(p) - 1) < 0.2
    assert row.ratio is None


def test_failing_method_is_recorded_and_others_proceed():
    # nothing to accelerate and no events: tuning stalls, crude runs to its cap
    table = compare_harness(BernoulliProblem(0.0), repeats=2, rule=StoppingRule(max_samples=1000), seed=0)
    for m in ("piecewise", "single"):
        assert table.row(m).error.startswith("CEError") and table.row(m).runs == []
    crude = table.row("crude")
    assert crude.error is None and len(crude.runs) == 2
    assert all(not r.converged for r in crude.runs) and crude.ratio is None
    assert "failed" in table.to_text()


def test_unknown_method():
    with pytest.raises(ValueError):
        compare_harness(TOY, methods=("magic",))


def test_derived_seed_is_stable_and_distinct():
    assert derived_seed(0, 1) == derived_seed(0, 1)
    assert len({derived_seed(0, k) for k in range(100)} | {derived_seed(1, 0)}) == 101


def test_ce_config_family_is_overridden_per_method():
    table = compare_harness(TOY, methods=("single",), repeats=1, rule=RULE, seed=0,
                            ce_config=CEConfig(family="piecewise"))
    assert not math.isnan(table.row("single").n_mean)
    assert type(table.row("single").ce.proposal["x"]).__name__ == "BoundedExponential"
