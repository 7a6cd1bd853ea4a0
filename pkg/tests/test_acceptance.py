"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` (the verdict
lines are also shown without ``-s``).  Tolerances are pinned as module
constants below.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import integrate, stats

from catalog import CATALOG, breakpoints
from oracles import exp1_as_pieces
from pmaccel import distributions as dist
from pmaccel.estimation import StoppingRule, crude_mc, crude_sample_size, is_estimate
from pmaccel.fitting import (
    FitConfig,
    fit_bounded_exponential,
    fit_bounded_normal,
    fit_mixture_em,
    fit_piece_weights,
    fit_piecewise,
    fit_single_baselines,
)
from pmaccel.harness import compare_harness
from pmaccel.problems import ScenarioProblem, TailProblem
from pmaccel.scenario import EgoConfig, simulate_batch, synthetic_model

WORKERS = os.cpu_count() or 1

# criterion 1
C1_P, C1_N, C1_REL = 7.4e-7, 5.5e7, 0.02
# criterion 2
C2_SPEEDUP, C2_SE, C2_SEEDS, C2_PASS_RATE, C2_SECONDS = 10.0, 3.0, 100, 0.90, 60.0
C2_RULE = StoppingRule(cadence=10, min_samples=100)
# criterion 3
C3_ORACLE_N, C3_ORACLE_SEED, C3_REPEATS, C3_SEED, C3_CI_ALPHA, C3_SECONDS = 10**7, 1, 10, 0, 0.2, 30 * 60.0
# criterion 4
C4_N, C4_BOOT, C4_SE, C4_EM_SLACK, C4_SECONDS = 100_000, 200, 3.0, 1e-10, 5 * 60.0
# criterion 5
C5_NORM, C5_ROUND_TRIP, C5_KS_N, C5_KS_C, C5_LR_N, C5_LR_SE, C5_SECONDS = 1e-8, 1e-9, 100_000, 1.63, 10**6, 3.0, 5 * 60.0
# criterion 7
C7_STEP, C7_PROBE = 0.05, 100


def verdict(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, detail


# --- 1 -----------------------------------------------------------------------------------


def test_criterion_1_crude_sample_size(capsys):
    n = crude_sample_size(C1_P, 0.2, 0.2)
    verdict(capsys, "criterion 1 (crude sample size)", abs(n / C1_N - 1) <= C1_REL,
            f"N = {n:.4g}, target {C1_N:.3g} within {C1_REL:.0%}")


# --- 2 -----------------------------------------------------------------------------------


def test_criterion_2_exponential_tail(capsys):
    p = math.exp(-4.0)
    problem = TailProblem(exp1_as_pieces(), 4.0)
    start = time.perf_counter()
    passed, speedups = 0, []
    for seed in range(C2_SEEDS):
        table = compare_harness(problem, ("piecewise", "crude"), repeats=1, rule=C2_RULE, seed=seed)
        acc, crude = table.row("piecewise").runs[0], table.row("crude").runs[0]
        speedups.append(crude.n_samples / acc.n_samples)
        passed += speedups[-1] >= C2_SPEEDUP and abs(acc.estimate - p) <= C2_SE * acc.std_error
    elapsed = time.perf_counter() - start
    rate = passed / C2_SEEDS
    verdict(capsys, "criterion 2 (Exp(1) tail, CE-tuned IS)", rate >= C2_PASS_RATE and elapsed < C2_SECONDS,
            f"pass rate {rate:.0%} (need {C2_PASS_RATE:.0%}), median speed-up {np.median(speedups):.1f}x, "
            f"{elapsed:.1f} s")


# --- 3 -----------------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_3_desk_rare_comparison(capsys):
    start = time.perf_counter()
    problem = ScenarioProblem(synthetic_model("desk-rare"))
    oracle = crude_mc(problem, StoppingRule(beta=1e-12, min_samples=C3_ORACLE_N, max_samples=C3_ORACLE_N),
                      C3_ORACLE_SEED, chunk_size=100_000, workers=WORKERS)
    lo, hi = oracle.ci(C3_CI_ALPHA)
    table = compare_harness(problem, repeats=C3_REPEATS, seed=C3_SEED, workers=WORKERS)
    elapsed = time.perf_counter() - start
    pw, single, crude = (table.row(m) for m in ("piecewise", "single", "crude"))
    with capsys.disabled():
        print("\n" + table.to_text())
        print(f"oracle P = {oracle.estimate:.5g}, 80% CI [{lo:.5g}, {hi:.5g}]")
    order = pw.n_mean <= single.n_mean < crude.n_mean
    inside = {m.method: lo <= m.estimate_mean <= hi for m in (pw, single)}
    ok = order and all(inside.values()) and elapsed < C3_SECONDS
    verdict(capsys, "criterion 3 (desk-rare comparison)", ok,
            f"N piecewise {pw.n_mean:.4g} <= single {single.n_mean:.4g} < crude {crude.n_mean:.4g}: {order}; "
            f"inside oracle CI: {inside}; {elapsed / 60:.1f} min")


# --- 4 -----------------------------------------------------------------------------------

RANGE_TRUTH = dist.PiecewiseMixture(
    (0.04, 0.12), (0.3, 0.6, 0.1),
    (dist.BoundedExponential(20.0, 0.0125, 0.04), dist.BoundedExponential(10.0, 0.04, 0.12),
     dist.BoundedExponential(15.0, 0.12, math.inf)),
)
RANGE_CFG = FitConfig(cuts=(0.04, 0.12), lower=0.0125)


def _mixture_params(x, init=None):
    p, s, _ = fit_mixture_em(x, 0.0, math.inf, 2, init=init)
    return np.r_[p[0], s]


def _piecewise_params(x):
    d, _ = fit_piecewise(x, RANGE_CFG)
    return np.r_[d.weights, [piece.rate for piece in d.pieces]]


FIT_CASES = {
    # kind: (truth, true parameter vector, estimator)
    "exponential": (dist.exponential(2.0), [2.0], lambda x: [fit_bounded_exponential(x)]),
    "bounded_exponential": (dist.BoundedExponential(3.0, 1.0, 2.0), [3.0],
                            lambda x: [fit_bounded_exponential(x, 1.0, 2.0)]),
    "bounded_normal": (dist.BoundedNormal(1.5, 0.5, 3.0), [1.5], lambda x: [fit_bounded_normal(x, 0.5, 3.0)]),
    "mixture": (dist.MixtureBoundedNormal((0.6, 0.4), (0.5, 2.0)), [0.6, 0.5, 2.0], None),
    "piecewise": (RANGE_TRUTH, [0.3, 0.6, 0.1, 20.0, 10.0, 15.0], _piecewise_params),
    "pareto": (dist.Pareto(1.0, 2.5), [2.5], lambda x: [fit_single_baselines(x)[1].shape]),
}


@pytest.mark.slow
def test_criterion_4_fitting_recovery(capsys):
    start = time.perf_counter()
    worst, failures = {}, []
    for k, (kind, (truth, theta, estimator)) in enumerate(FIT_CASES.items()):
        rng = np.random.default_rng(np.random.SeedSequence(4, spawn_key=(k,)))
        x = truth.sample(rng, C4_N)
        if kind == "mixture":
            est = _mixture_params(x)
            init = (np.r_[est[0], 1 - est[0]], est[1:])
            estimator = lambda xb: _mixture_params(xb, init)  # noqa: E731 - warm-started bootstrap refit
        else:
            est = np.asarray(estimator(x), float)
        boot = np.array([estimator(x[rng.integers(0, C4_N, C4_N)]) for _ in range(C4_BOOT)], float)
        se = boot.std(axis=0, ddof=1)
        z = np.abs(est - np.asarray(theta)) / se
        worst[kind] = float(z.max())
        if np.any(z > C4_SE):
            failures.append(kind)

    x = FIT_CASES["mixture"][0].sample(np.random.default_rng(41), C4_N)
    _, _, rep = fit_mixture_em(x, 0.0, math.inf, 2)
    ascent = float(np.min(np.diff(rep.trace)))
    xr = RANGE_TRUTH.sample(np.random.default_rng(42), C4_N)
    d, _ = fit_piecewise(xr, RANGE_CFG)
    counts = np.bincount(RANGE_TRUTH.piece_index(xr), minlength=3)
    exact = list(d.weights) == [c / C4_N for c in counts] and np.array_equal(
        fit_piece_weights(xr, RANGE_CFG.cuts), np.asarray(d.weights))
    elapsed = time.perf_counter() - start
    ok = not failures and ascent >= -C4_EM_SLACK and exact and elapsed < C4_SECONDS
    verdict(capsys, "criterion 4 (fitting recovery)", ok,
            f"max |error|/SE per kind {({k: round(v, 2) for k, v in worst.items()})}; "
            f"min EM log-lik step {ascent:.3g}; exact piece weights {exact}; {elapsed:.0f} s")


# --- 5 -----------------------------------------------------------------------------------


def _quad_total(d):
    pts = breakpoints(d)
    return sum(integrate.quad(d.pdf, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)[0] for a, b in zip(pts[:-1], pts[1:]))


def test_criterion_5_distribution_properties(capsys):
    start = time.perf_counter()
    kinds = sorted(CATALOG)
    bad = []
    y = np.linspace(1e-6, 1 - 1e-6, 2001)
    for i, kind in enumerate(kinds):
        d = CATALOG[kind]
        if abs(_quad_total(d) - 1.0) > C5_NORM:
            bad.append(f"{kind}: normalization")
        if np.max(np.abs(d.cdf(d.ppf(y)) - y)) > C5_ROUND_TRIP:
            bad.append(f"{kind}: round trip")
        x = d.sample(np.random.default_rng(np.random.SeedSequence(12345, spawn_key=(i,))), C5_KS_N)
        if stats.kstest(x, d.cdf).statistic >= C5_KS_C / math.sqrt(C5_KS_N):
            bad.append(f"{kind}: KS")
        if isinstance(d, dist.TiltedDistribution):
            xq = d.sample(np.random.default_rng(7), C5_LR_N)
            w = dist.likelihood_ratio(d.base, d, xq)
            if abs(w.mean() - 1.0) > C5_LR_SE * w.std() / math.sqrt(C5_LR_N):
                bad.append(f"{kind}: mean weight")
    elapsed = time.perf_counter() - start
    verdict(capsys, "criterion 5 (distribution properties)", not bad and elapsed < C5_SECONDS,
            f"{len(kinds)} kinds checked; failures: {bad or 'none'}; {elapsed:.0f} s")


# --- 6 -----------------------------------------------------------------------------------


def test_criterion_6_identity_proposal(capsys):
    rule = StoppingRule(max_samples=300_000)
    same = []
    for problem in (TailProblem(dist.exponential(1.0), 4.0), ScenarioProblem(synthetic_model("desk-rare"))):
        crude = crude_mc(problem, rule, seed=6)
        ident = is_estimate(problem, problem.variables(), rule, seed=6)
        same.append(np.array_equal(crude.trace, ident.trace) and crude.estimate == ident.estimate)
    verdict(capsys, "criterion 6 (identity proposal = crude)", all(same), f"exact trace match per problem: {same}")


# --- 7 -----------------------------------------------------------------------------------


def test_criterion_7_simulator(capsys):
    rng = np.random.default_rng(11)
    v, r, t = rng.uniform(5, 35, C7_PROBE), rng.uniform(2, 80, C7_PROBE), rng.uniform(0.4, 4.0, C7_PROBE)
    ego = EgoConfig()
    _, coarse = simulate_batch(v, r, t, ego)
    _, fine = simulate_batch(v, r, t, EgoConfig(step=ego.step / 2))
    step = float(np.max(np.abs(coarse - fine)))

    ranges = np.linspace(1.0, 80.0, 160)
    monotone = True
    for vl in (8.0, 20.0, 32.0):
        for ttc in (0.3, 0.6, 1.0, 1.5, 2.0, 3.0):
            c, _ = simulate_batch(np.full(ranges.size, vl), ranges, np.full(ranges.size, ttc))
            monotone &= bool(np.all(np.diff(c.astype(int)) >= 0))

    a, b = simulate_batch(v, r, t, ego), simulate_batch(v, r, t, ego)
    exact = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    ok = step < C7_STEP and monotone and exact
    verdict(capsys, "criterion 7 (simulator)", ok,
            f"step-halving max |d min_range| {step:.3g} m; monotone in R_L at fixed TTC {monotone}; "
            f"bit-exact {exact}")
