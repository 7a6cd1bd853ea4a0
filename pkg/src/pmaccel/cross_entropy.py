"""Multi-level cross-entropy tuning of accelerated (proposal) distributions.

Each iteration draws a batch under the current proposal, takes the
``rho``-quantile of the severity scores as the next level (never below the
event level 0), and refits every accelerated variable by likelihood-ratio
weighted maximum likelihood on the elite samples.  Tilted densities form an
exponential family in the tilt, so the weighted MLE for a tilt matches the
tilted mean to the weighted elite mean; piece weights of a piecewise
proposal are set to the weighted elite share of each piece, mixed with a
small floor of the original weights so that no piece loses support.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import distributions as dist

CE_STREAM = 2
FAMILIES = ("piecewise", "single")


class CEError(RuntimeError):
    """Cross-entropy tuning stalled; ``diagnostics`` holds the level history."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class CEConfig:
    """Cross-entropy settings.

    Attributes:
        batch_size: samples per iteration.
        rho: elite fraction.
        smoothing: weight of the new parameters (1 = no smoothing).
        max_iter: iteration cap.
        family: ``"piecewise"`` tilts every piece of the original and tunes
            the piece weights; ``"single"`` replaces each variable by one
            exponential on its support.
        tune_weights: tune piece weights (piecewise family only).
        weight_floor: share of the original piece weights kept in the tuned
            weights.
        min_piece_elites: elites a piece needs before its tilt is updated.
        patience: iterations without a lower level before giving up.
        refine_iter: extra iterations run at the event level once it has
            been reached, letting the smoothed parameters settle.
    """

    batch_size: int = 1000
    rho: float = 0.1
    smoothing: float = 0.7
    max_iter: int = 30
    family: str = "piecewise"
    tune_weights: bool = True
    weight_floor: float = 0.01
    min_piece_elites: int = 5
    patience: int = 3
    refine_iter: int = 5

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if not 0.0 < self.smoothing <= 1.0:
            raise ValueError("smoothing must lie in (0, 1]")
        if self.batch_size < 10 or self.max_iter < 1 or self.patience < 1 or self.refine_iter < 0:
            raise ValueError("batch_size >= 10, max_iter >= 1, patience >= 1 and refine_iter >= 0 required")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if not 0.0 <= self.weight_floor < 1.0:
            raise ValueError("weight_floor must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "CEConfig":
        names = cls.__dataclass_fields__
        return cls(**{k: v for k, v in doc.items() if k in names})


@dataclass
class CEResult:
    proposal: dict
    levels: list
    iterations: int
    reached: bool
    samples_used: int
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "proposal": {k: dist.to_dict(v) for k, v in self.proposal.items()},
            "levels": [float(x) for x in self.levels],
            "iterations": self.iterations,
            "reached": self.reached,
            "samples_used": self.samples_used,
        }


# ---------------------------------------------------------------------------
# tilt that matches a target mean


def _leaf_mean(base, theta: float) -> float:
    return float(dist._tilt_leaf(base, theta).mean())


def theta_for_mean(base, target: float) -> float:
    """Tilt of ``base`` whose mean equals ``target`` (clipped inside support)."""
    lo, hi = base.lower, base.upper
    if isinstance(base, dist.BoundedExponential) and math.isinf(hi):
        if target <= lo:
            raise ValueError("target mean must exceed the lower bound")
        return base.rate - 1.0 / (target - lo)
    if not lo < target < hi:
        raise ValueError("target mean must lie strictly inside the support")
    if math.isfinite(hi):
        width = hi - lo
        eps = 1e-9 * width
        target = min(max(target, lo + eps), hi - eps)
        scale = 1.0 / width
    else:
        scale = 1.0 / max(base.mean() - lo, 1e-12)

    def g(t):
        return _leaf_mean(base, t) - target

    a, b = -scale, scale
    for _ in range(80):
        ga, gb = g(a), g(b)
        if ga <= 0.0 <= gb:
            return brentq(g, a, b, xtol=1e-12 * max(1.0, abs(b)), rtol=1e-12)
        if ga > 0:
            a *= 2.0
        if gb < 0:
            b *= 2.0
    raise RuntimeError("could not bracket the tilt for the requested mean")


# ---------------------------------------------------------------------------
# per-variable proposal families


def _support_lower(d) -> float:
    return float(d.lower)


def initial_proposal(variables: dict, family: str) -> dict:
    """Starting proposal: zero tilt (piecewise) or a moment-matched exponential."""
    out = {}
    for name, d in variables.items():
        if family == "single":
            lo = _support_lower(d)
            m = d.mean()
            if not math.isfinite(m):
                m = float(d.ppf(0.5))
            out[name] = dist.BoundedExponential(1.0 / (m - lo), lo, math.inf)
        elif isinstance(d, dist.PiecewiseMixture):
            out[name] = dist.TiltedDistribution(d, tuple(0.0 for _ in range(d.k)), d.weights)
        elif isinstance(d, dist.Pareto):
            out[name] = d  # not tiltable: left at the original
        else:
            out[name] = dist.TiltedDistribution(d, 0.0)
    return out


def _update(original, current, x, w, cfg: CEConfig):
    """Weighted-MLE refit of one proposal followed by smoothing."""
    a = cfg.smoothing
    tot = w.sum()
    if not tot > 0.0:
        return current
    if isinstance(current, dist.BoundedExponential):
        lo = current.lower
        excess = float(np.dot(w, x - lo) / tot)
        if not excess > 0:
            return current
        rate = a / excess + (1.0 - a) * current.rate
        return dist.BoundedExponential(rate, lo, math.inf)
    if not isinstance(current, dist.TiltedDistribution):
        return current
    base = current.base
    if isinstance(base, dist.PiecewiseMixture):
        idx = base.piece_index(x)
        theta = list(current.theta)
        wts = np.asarray(current.weights, dtype=float)
        share = np.bincount(idx, weights=w, minlength=base.k) / tot
        for i, piece in enumerate(base.pieces):
            m = idx == i
            wi = w[m]
            if np.count_nonzero(wi) < cfg.min_piece_elites or not wi.sum() > 0:
                continue
            target = float(np.dot(wi, x[m]) / wi.sum())
            try:
                t_new = theta_for_mean(piece, target)
            except ValueError:
                continue
            theta[i] = a * t_new + (1.0 - a) * theta[i]
        if cfg.tune_weights:
            pi_orig = np.asarray(base.weights)
            new = (1.0 - cfg.weight_floor) * share + cfg.weight_floor * pi_orig
            wts = a * new + (1.0 - a) * wts
            wts = wts / wts.sum()
        return dist.TiltedDistribution(base, tuple(theta), tuple(wts))
    target = float(np.dot(w, x) / tot)
    try:
        t_new = theta_for_mean(base, target)
    except ValueError:
        return current
    return dist.TiltedDistribution(base, a * t_new + (1.0 - a) * float(current.theta))


def _params(p) -> dict:
    if isinstance(p, dist.BoundedExponential):
        return {"rate": p.rate}
    if isinstance(p, dist.TiltedDistribution):
        d = {"theta": np.atleast_1d(p.theta).tolist()}
        if p.weights is not None:
            d["weights"] = list(p.weights)
        return d
    return {}


def cross_entropy_tune(problem, config: CEConfig | None = None, seed: int = 0) -> CEResult:
    """Tune accelerated distributions for ``problem`` by multi-level CE.

    Iteration ``i`` draws from ``SeedSequence(seed, spawn_key=(CE_STREAM, i))``.
    If the first batch already has at least a ``rho`` share of events the
    starting proposal is returned unchanged (nothing to accelerate).

    Raises:
        CEError: the level failed to decrease for ``config.patience``
            consecutive iterations.
    """
    cfg = config or CEConfig()
    originals = problem.variables()
    proposal = initial_proposal(originals, cfg.family)
    levels, history = [], []
    best = math.inf
    stall = 0
    used = 0
    reached = False
    it = 0
    refine_left = cfg.refine_iter
    for it in range(1, cfg.max_iter + cfg.refine_iter + 1):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(CE_STREAM, it)))
        batch = problem.run(rng, cfg.batch_size, proposal)
        used += cfg.batch_size
        sev = batch.severity
        level = 0.0 if reached else max(float(np.quantile(sev, cfg.rho, method="lower")), 0.0)
        levels.append(level)
        if it == 1 and level <= 0.0:
            reached = True
            history.append({k: _params(v) for k, v in proposal.items()})
            break
        elite = sev <= level
        w = np.where(elite, np.exp(batch.log_weight), 0.0)
        new = {}
        for name, cur in proposal.items():
            x, mask = batch.draws[name]
            new[name] = _update(originals[name], cur, x[mask], w[mask], cfg)
        proposal = new
        history.append({k: _params(v) for k, v in proposal.items()})
        if reached:
            refine_left -= 1
            if refine_left <= 0:
                break
            continue
        if level <= 0.0:
            reached = True
            if refine_left == 0:
                break
            continue
        if it >= cfg.max_iter:
            break
        if level < best:
            best, stall = level, 0
        else:
            stall += 1
            if stall >= cfg.patience:
                raise CEError(
                    f"no elite progress for {stall} consecutive iterations "
                    f"(level stuck at {best:.6g} after {it} iterations)",
                    {"levels": levels, "iterations": it, "samples_used": used},
                )
    return CEResult(proposal, levels, it, reached, used, history)
