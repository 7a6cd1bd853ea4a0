"""Maximum-likelihood fitting of bounded, mixture and piecewise distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit
from scipy import optimize, special

from .distributions import (
    BoundedExponential,
    BoundedNormal,
    MixtureBoundedNormal,
    Pareto,
    PiecewiseMixture,
    _log_norm_mass,
    exponential,
    to_dict,
)

FAMILIES = ("exponential", "normal", "normal_mixture")


@dataclass
class FitConfig:
    """Settings for :func:`fit_piecewise` and :func:`fit_mixture_em`.

    Either ``cuts`` (explicit interior truncation points) or ``quantiles``
    (empirical quantile levels) decides where the data is split.  One family
    per piece: ``"exponential"``, ``"normal"`` or ``"normal_mixture"``.
    """

    cuts: Sequence[float] | None = None
    quantiles: Sequence[float] = (0.80, 0.99)
    families: Sequence[str] = ("exponential", "exponential", "exponential")
    lower: float = 0.0
    em_components: int = 2
    tol: float = 1e-10
    max_iter: int = 2000
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.em_components < 1:
            raise ValueError("need at least one mixture component")
        if self.max_iter < 1 or self.restarts < 1:
            raise ValueError("max_iter and restarts must be positive")
        for f in self.families:
            if f not in FAMILIES:
                raise ValueError(f"unknown family {f!r}; pick from {FAMILIES}")
        n_cuts = len(self.cuts) if self.cuts is not None else len(self.quantiles)
        if n_cuts != len(self.families) - 1:
            raise ValueError(
                f"{len(self.families)} families need {len(self.families) - 1} cuts, got {n_cuts}"
            )

    @classmethod
    def range_model(cls, **kw) -> "FitConfig":
        """Three bounded exponential pieces, the inverse-range layout."""
        kw.setdefault("quantiles", (0.80, 0.99))
        return cls(families=("exponential",) * 3, **kw)

    @classmethod
    def ttc_model(cls, **kw) -> "FitConfig":
        """Mixture-of-two-normals body and exponential tail, the inverse-TTC layout."""
        kw.setdefault("quantiles", (0.90,))
        return cls(families=("normal_mixture", "exponential"), em_components=2, **kw)

    def to_dict(self) -> dict:
        return {
            "cuts": None if self.cuts is None else [float(c) for c in self.cuts],
            "quantiles": [float(q) for q in self.quantiles],
            "families": list(self.families),
            "lower": float(self.lower),
            "em_components": self.em_components,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "restarts": self.restarts,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FitConfig":
        doc = dict(doc)
        for key in ("cuts", "quantiles", "families"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        return cls(**doc)


@dataclass
class FitReport:
    distribution: object
    log_likelihood: float
    iterations: int
    converged: bool
    piece_counts: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "distribution": to_dict(self.distribution),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "piece_counts": list(self.piece_counts),
        }


def _data(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty dataset")
    if not np.isfinite(x).all():
        raise ValueError("data contains non-finite values")
    return x


def _within(x, lower, upper):
    if lower >= upper:
        raise ValueError(f"invalid bounds [{lower}, {upper})")
    if x.min() < lower or x.max() > upper:
        raise ValueError(f"data fall outside [{lower}, {upper})")


def _weights(w, n):
    if w is None:
        return None
    w = np.asarray(w, dtype=float).ravel()
    if w.shape != (n,) or (w < 0).any() or w.sum() <= 0:
        raise ValueError("weights must be non-negative, one per observation, not all zero")
    return w


def _maximize_log_param(objective, start: float, max_expand: int = 80) -> float:
    """Maximize a unimodal ``objective(p)`` over p > 0.

    Works on u = log p.  The bracket is grown geometrically from ``start``
    and then polished by Brent's method.
    """

    def f(u):
        return -objective(math.exp(u))

    u0, step = math.log(start), 0.25
    f0, fl, fr = f(u0), f(u0 - step), f(u0 + step)
    if f0 <= fl and f0 <= fr:
        bracket = (u0 - step, u0, u0 + step)
    else:
        direction = 1.0 if fr < fl else -1.0
        a, fa = u0, f0
        b, fb = u0 + direction * step, min(fl, fr)
        for _ in range(max_expand):
            step *= 2.0
            c = b + direction * step
            fc = f(c)
            if fc >= fb:
                bracket = (a, b, c)
                break
            a, fa, b, fb = b, fb, c, fc
        else:
            raise ValueError("likelihood has no interior maximum (bracket search diverged)")
    res = optimize.minimize_scalar(f, bracket=bracket, method="brent", tol=1e-12)
    return math.exp(res.x)


# ---------------------------------------------------------------------------
# piece weights


def fit_piece_weights(data, cuts) -> np.ndarray:
    """pi_i = |S_i| / n where S_i collects points in [gamma_{i-1}, gamma_i)."""
    x = _data(data)
    cuts = np.asarray(cuts, dtype=float)
    if np.any(np.diff(cuts) <= 0):
        raise ValueError("cuts must increase strictly")
    counts = np.bincount(np.searchsorted(cuts, x, side="right"), minlength=cuts.size + 1)
    return counts / x.size


# ---------------------------------------------------------------------------
# bounded exponential


def bounded_exponential_loglik(rate, data, lower, upper, weights=None) -> float:
    x = np.asarray(data, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    tot = w.sum()
    val = tot * math.log(rate) - rate * float(np.dot(w, x - lower))
    if not math.isinf(upper):
        val -= tot * math.log(-math.expm1(-rate * (upper - lower)))
    return val


def fit_bounded_exponential(data, lower=0.0, upper=math.inf, weights=None) -> float:
    """MLE of the rate of an exponential conditioned on [lower, upper)."""
    x = _data(data)
    if x.size < 2:
        raise ValueError("need at least two observations")
    _within(x, lower, upper)
    w = _weights(weights, x.size)
    if np.ptp(x) == 0:
        raise ValueError("degenerate data: all values equal")
    excess = np.average(x - lower, weights=w)
    if math.isinf(upper):
        return float(1.0 / excess)
    if excess >= 0.5 * (upper - lower):
        raise ValueError(
            "data are not decreasing on the interval; the bounded exponential "
            "MLE rate would be non-positive"
        )
    return _maximize_log_param(
        lambda lam: bounded_exponential_loglik(lam, x, lower, upper, w), 1.0 / excess
    )


# ---------------------------------------------------------------------------
# bounded normal


def _normal_loglik_stats(scale, tot, s2, lower, upper) -> float:
    # the zero-mean bounded normal likelihood depends on the data only
    # through the weight total and the weighted sum of squares
    return (
        -s2 / (2 * scale * scale)
        - tot * (math.log(scale) + 0.5 * math.log(2 * math.pi))
        - tot * _log_norm_mass(lower / scale, upper / scale)
    )


def _fit_normal_stats(tot, s2, lower, upper) -> float:
    rms = math.sqrt(s2 / tot)
    if lower == 0.0 and math.isinf(upper):
        return rms
    return _maximize_log_param(lambda s: _normal_loglik_stats(s, tot, s2, lower, upper), rms)


def bounded_normal_loglik(scale, data, lower, upper, weights=None) -> float:
    """Log-likelihood of a zero-mean normal conditioned on [lower, upper)."""
    x = np.asarray(data, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    return _normal_loglik_stats(scale, w.sum(), float(np.dot(w, x * x)), lower, upper)


def fit_bounded_normal(data, lower=0.0, upper=math.inf, weights=None) -> float:
    """MLE of sigma for N(0, sigma^2) conditioned on [lower, upper)."""
    x = _data(data)
    if x.size < 2:
        raise ValueError("need at least two observations")
    _within(x, lower, upper)
    w = _weights(weights, x.size)
    if np.ptp(x) == 0:
        raise ValueError("degenerate data: all values equal")
    if w is None:
        return _fit_normal_stats(float(x.size), float(np.dot(x, x)), lower, upper)
    return _fit_normal_stats(float(w.sum()), float(np.dot(w, x * x)), lower, upper)


# ---------------------------------------------------------------------------
# EM for a mixture of bounded normals


def _component_logpdf(x, scales, lower, upper):
    s = np.asarray(scales)[:, None]
    logmass = np.array([_log_norm_mass(lower / v, upper / v) for v in scales])[:, None]
    return -0.5 * (x[None, :] / s) ** 2 - np.log(s) - 0.5 * math.log(2 * math.pi) - logmass


def mixture_loglik(x, weights, scales, lower, upper) -> float:
    with np.errstate(divide="ignore"):
        lp = np.log(np.asarray(weights))[:, None] + _component_logpdf(x, scales, lower, upper)
    return math.fsum(special.logsumexp(lp, axis=0))


@njit(cache=True)
def _em_pass(x, logc, inv_s, tots, sq):
    """One sweep: mixture log-likelihood and the responsibility statistics.

    ``logc[j]`` is log(p_j / (s_j sqrt(2 pi) mass_j)).  The log-likelihood
    is accumulated with Neumaier compensation.
    """
    m = logc.size
    lp = np.empty(m)
    tots[:] = 0.0
    sq[:] = 0.0
    ll = 0.0
    comp = 0.0
    for i in range(x.size):
        xi = x[i]
        mx = -np.inf
        jmax = 0
        for j in range(m):
            z = xi * inv_s[j]
            lp[j] = logc[j] - 0.5 * z * z
            if lp[j] > mx:
                mx = lp[j]
                jmax = j
        tot = 0.0
        for j in range(m):
            lp[j] = 1.0 if j == jmax else math.exp(lp[j] - mx)
            tot += lp[j]
        v = mx + math.log(tot)
        t = ll + v
        if abs(ll) >= abs(v):
            comp += (ll - t) + v
        else:
            comp += (v - t) + ll
        ll = t
        x2 = xi * xi
        for j in range(m):
            r = lp[j] / tot
            tots[j] += r
            sq[j] += r * x2
    return ll + comp


def _em_sweep(x, p, s, lower, upper, tots, sq):
    logmass = np.array([_log_norm_mass(lower / v, upper / v) for v in s])
    with np.errstate(divide="ignore"):
        logc = np.log(p) - np.log(s) - 0.5 * math.log(2 * math.pi) - logmass
    return _em_pass(x, logc, 1.0 / s, tots, sq)


def _em_run(x, p, s, lower, upper, tol, max_iter, trace=None):
    """Iterate EM from (p, s) until the log-likelihood gain per observation
    drops below ``tol``; appends to and returns ``trace``."""
    n = x.size
    tots = np.empty(s.size)
    sq = np.empty(s.size)
    ll = _em_sweep(x, p, s, lower, upper, tots, sq)
    trace = [ll] if trace is None else trace
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = tots / n                                          # M step, weights
        new_s = s.copy()
        for j in range(s.size):
            if tots[j] <= 1e-12 * n:
                continue
            cand = _fit_normal_stats(tots[j], sq[j], lower, upper)
            # keep the old scale unless the candidate improves the M-step objective
            if _normal_loglik_stats(cand, tots[j], sq[j], lower, upper) >= _normal_loglik_stats(
                s[j], tots[j], sq[j], lower, upper
            ):
                new_s[j] = cand
        s = new_s
        ll_new = _em_sweep(x, p, s, lower, upper, tots, sq)  # E step for the next round
        trace.append(ll_new)
        step, ll = ll_new - ll, ll_new
        if step < tol * n:
            converged = True
            break
    return p, s, ll, it, converged, trace


SCREEN_TOL = 1e-6


def fit_mixture_em(data, lower=0.0, upper=math.inf, m=2, config: FitConfig | None = None,
                   init=None):
    """Fit ``m`` zero-mean bounded normals sharing [lower, upper) by EM.

    Returns ``(weights, scales, report)`` with components sorted by scale.
    ``init`` = (weights, scales) replaces the random restarts with a single
    warm-started run.
    """
    cfg = config or FitConfig()
    x = _data(data)
    _within(x, lower, upper)
    if m < 1:
        raise ValueError("m must be at least 1")
    if x.size < 2 * m:
        raise ValueError(f"need at least {2 * m} observations for {m} components")
    if np.unique(x).size < m:
        raise ValueError(f"{m} components exceed the number of distinct values")

    rms = math.sqrt(float(np.mean(x * x)))
    if init is not None:
        starts = [(np.asarray(init[0], float), np.asarray(init[1], float))]
    else:
        starts = [(np.full(m, 1.0 / m), rms * np.geomspace(0.5, 2.0, m) if m > 1 else np.array([rms]))]
        for r in range(1, cfg.restarts):
            rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(r,)))
            s0 = np.sort(rms * np.exp(rng.uniform(math.log(0.5), math.log(2.0), m)))
            starts.append((np.full(m, 1.0 / m), s0))

    # screen every start at a loose tolerance, then polish the best one
    best = None
    screen_tol = max(cfg.tol, SCREEN_TOL)
    for p0, s0 in starts:
        run = _em_run(x, p0.copy(), s0.copy(), lower, upper, screen_tol, cfg.max_iter)
        if best is None or run[2] > best[2]:
            best = run
    p, s, ll, iters, converged, trace = best
    if screen_tol > cfg.tol and iters < cfg.max_iter:
        p, s, ll, more, converged, trace = _em_run(
            x, p, s, lower, upper, cfg.tol, cfg.max_iter - iters, trace[:-1]
        )
        iters += more
    order = np.argsort(s)
    p, s = p[order], s[order]
    p = p / p.sum()
    dist = MixtureBoundedNormal(tuple(p), tuple(s), lower, upper)
    report = FitReport(dist, ll, iters, converged, [x.size], trace)
    return p, s, report


# ---------------------------------------------------------------------------
# piecewise pipeline


def _fit_piece(family, x, lower, upper, cfg, piece_no):
    """Fit one piece; returns (distribution, loglik, iterations, converged)."""
    if family == "exponential":
        d = BoundedExponential(fit_bounded_exponential(x, lower, upper), lower, upper)
        return d, math.fsum(d.logpdf(x)), 1, True
    if family == "normal":
        d = BoundedNormal(fit_bounded_normal(x, lower, upper), lower, upper)
        return d, math.fsum(d.logpdf(x)), 1, True
    sub = FitConfig(
        quantiles=(), families=("normal_mixture",), em_components=cfg.em_components,
        tol=cfg.tol, max_iter=cfg.max_iter, restarts=cfg.restarts, seed=cfg.seed + 7919 * piece_no,
    )
    _, _, rep = fit_mixture_em(x, lower, upper, cfg.em_components, sub)
    return rep.distribution, rep.log_likelihood, rep.iterations, rep.converged


def choose_cuts(data, config: FitConfig) -> tuple:
    if config.cuts is not None:
        return tuple(float(c) for c in config.cuts)
    return tuple(float(c) for c in np.quantile(np.asarray(data, float), list(config.quantiles)))


def fit_piecewise(data, config: FitConfig | None = None):
    """Split the data at the truncation points and fit every piece by MLE.

    Returns ``(PiecewiseMixture, FitReport)``.
    """
    cfg = config or FitConfig()
    x = _data(data)
    k = len(cfg.families)
    if x.size < 10 * k:
        raise ValueError(f"need at least {10 * k} observations for {k} pieces")
    if x.min() < cfg.lower:
        raise ValueError(f"data fall below the lower bound {cfg.lower}")
    cuts = choose_cuts(x, cfg)
    bounds = (cfg.lower, *cuts, math.inf)
    if any(a >= b for a, b in zip(bounds[:-1], bounds[1:])):
        raise ValueError(f"truncation points do not increase strictly: {bounds}")

    weights = fit_piece_weights(x, cuts)
    idx = np.searchsorted(np.asarray(cuts), x, side="right")
    pieces, counts = [], []
    ll = 0.0
    iters, converged = 0, True
    for i, family in enumerate(cfg.families):
        xi = x[idx == i]
        if xi.size == 0:
            raise ValueError(f"no data in piece {i} on [{bounds[i]}, {bounds[i + 1]})")
        d, li, it, ok = _fit_piece(family, xi, bounds[i], bounds[i + 1], cfg, i)
        pieces.append(d)
        counts.append(int(xi.size))
        ll += xi.size * math.log(weights[i]) + li
        iters += it
        converged &= ok
    dist = PiecewiseMixture(cuts, tuple(weights), tuple(pieces))
    return dist, FitReport(dist, ll, iters, converged, counts)


def fit_single_baselines(data):
    """Closed-form single-distribution fits: (exponential, Pareto)."""
    x = _data(data)
    if x.size < 2:
        raise ValueError("need at least two observations")
    if (x <= 0).any():
        raise ValueError("Pareto fit needs strictly positive data")
    xm = float(x.min())
    s = math.fsum(np.log(x / xm))
    if s == 0:
        raise ValueError("degenerate data: all values equal")
    return exponential(1.0 / float(np.mean(x))), Pareto(xm, x.size / s)
