"""Crude Monte Carlo and importance-sampling estimators with a sequential
relative-half-width stopping rule.

Both estimators share one accumulation loop.  Samples are produced in
chunks, each drawn from its own stream ``SeedSequence(seed,
spawn_key=(EVAL_STREAM, chunk))``; chunks may be simulated concurrently but
are always merged in chunk order, so results do not depend on the number of
workers.  The stopping rule is checked every ``cadence`` samples.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from .distributions import check_support

EVAL_STREAM = 1


def z_value(alpha: float) -> float:
    """Two-sided normal quantile z_{alpha/2} = Phi^{-1}(1 - alpha/2)."""
    return float(ndtri(1.0 - alpha / 2.0))


@dataclass(frozen=True)
class StoppingRule:
    """Stop once z_{alpha/2} * SE / P_hat <= beta (checked every ``cadence``)."""

    alpha: float = 0.2
    beta: float = 0.2
    cadence: int = 100
    min_samples: int = 500
    max_samples: int = 10**8

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if self.cadence < 1:
            raise ValueError("cadence must be a positive integer")
        if not 1 <= self.min_samples <= self.max_samples:
            raise ValueError("need 1 <= min_samples <= max_samples")

    @property
    def z(self) -> float:
        return z_value(self.alpha)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "StoppingRule":
        return cls(**{k: doc[k] for k in ("alpha", "beta", "cadence", "min_samples", "max_samples") if k in doc})


@dataclass
class EstimationResult:
    """Outcome of one estimation run.

    ``trace`` has one row per cadence check: (n, estimate, rel_half_width).
    """

    estimate: float
    n_samples: int
    converged: bool
    rel_half_width: float
    std_error: float
    trace: np.ndarray = field(repr=False)
    seed: int | None = None
    method: str = "crude"
    wall_time: float = 0.0
    metadata: dict = field(default_factory=dict)

    def ci(self, alpha: float = 0.2) -> tuple:
        h = z_value(alpha) * self.std_error
        return self.estimate - h, self.estimate + h

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "method": self.method,
            "estimate": self.estimate,
            "n_samples": self.n_samples,
            "converged": self.converged,
            "rel_half_width": _finite_or_none(self.rel_half_width),
            "std_error": self.std_error,
            "seed": self.seed,
            "metadata": self.metadata,
            "timing": {"wall_time": self.wall_time},
        }

    def trace_csv(self) -> str:
        lines = ["n,estimate,rel_half_width"]
        for n, est, rhw in self.trace:
            lines.append(f"{int(n)},{est!r},{rhw!r}")
        return "\n".join(lines) + "\n"


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def relative_half_width(terms, alpha: float = 0.2) -> float:
    """z_{alpha/2} * std(terms) / (sqrt(N) * mean(terms)).

    ``std`` is the plug-in (ddof=0) standard deviation, which for 0/1 terms is
    the binomial sqrt(P(1-P)).  Returns ``inf`` when the mean is zero.
    """
    y = np.asarray(terms, dtype=float)
    if y.size < 2:
        raise ValueError("need at least two terms")
    p = y.mean()
    if p <= 0.0:
        return math.inf
    return z_value(alpha) * y.std() / (math.sqrt(y.size) * p)


def crude_sample_size(p: float, alpha: float = 0.2, beta: float = 0.2) -> float:
    """Samples crude Monte Carlo needs to reach relative half-width ``beta``."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return z_value(alpha) ** 2 * (1.0 - p) / (beta**2 * p)


def _chunk_terms(problem, proposal, seed, chunk: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(EVAL_STREAM, chunk)))
    b = problem.run(rng, size, proposal)
    if proposal is None:
        return b.indicator.astype(float)
    return np.where(b.indicator, np.exp(b.log_weight), 0.0)


def _run(problem, proposal, rule: StoppingRule, seed: int, method: str,
         chunk_size: int, workers: int) -> EstimationResult:
    start = time.perf_counter()
    z = rule.z
    cad = rule.cadence
    chunk_size = max(cad, (chunk_size // cad) * cad)
    n = 0
    s = s2 = 0.0
    rows = []
    stop_at = None
    chunk = 0
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while stop_at is None and n < rule.max_samples:
            k = workers if pool else 1
            sizes = []
            left = rule.max_samples - n
            for _ in range(k):
                m = min(chunk_size, left)
                if m <= 0:
                    break
                sizes.append(m)
                left -= m
            ids = range(chunk, chunk + len(sizes))
            if pool:
                results = list(pool.map(lambda a: _chunk_terms(problem, proposal, seed, *a), zip(ids, sizes)))
            else:
                results = [_chunk_terms(problem, proposal, seed, ids[0], sizes[0])]
            chunk += len(sizes)
            for y in results:
                cs = s + np.cumsum(y)
                cs2 = s2 + np.cumsum(y * y)
                first = cad - n % cad
                idx = np.arange(first - 1, y.size, cad)
                if idx.size:
                    nn = (n + idx + 1).astype(float)
                    est = cs[idx] / nn
                    var = np.maximum(cs2[idx] / nn - est * est, 0.0)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        rhw = np.where(est > 0, z * np.sqrt(var / nn) / est, np.inf)
                    ok = np.flatnonzero((nn >= rule.min_samples) & (rhw <= rule.beta))
                    last = ok[0] if ok.size else idx.size - 1
                    rows.append(np.column_stack([nn, est, rhw])[: last + 1])
                    if ok.size:
                        stop_at = int(nn[last])
                        s, s2 = float(cs[idx[last]]), float(cs2[idx[last]])
                        n = stop_at
                        break
                n += y.size
                s, s2 = float(cs[-1]), float(cs2[-1])
    finally:
        if pool:
            pool.shutdown()
    trace = np.vstack(rows) if rows else np.empty((0, 3))
    est = s / n if n else 0.0
    var = max(s2 / n - est * est, 0.0) if n else 0.0
    se = math.sqrt(var / n) if n else math.inf
    rhw = z * se / est if est > 0 else math.inf
    return EstimationResult(
        estimate=est,
        n_samples=n,
        converged=stop_at is not None,
        rel_half_width=rhw,
        std_error=se,
        trace=trace,
        seed=seed,
        method=method,
        wall_time=time.perf_counter() - start,
        metadata={"rule": rule.to_dict()},
    )


def crude_mc(problem, rule: StoppingRule | None = None, seed: int = 0, *,
             chunk_size: int = 10_000, workers: int = 1) -> EstimationResult:
    """Sample mean of the event indicator under the original model.

    Runs until the relative half-width reaches ``rule.beta`` (after at least
    ``rule.min_samples``) or ``rule.max_samples`` is exhausted; in the latter
    case ``converged`` is False (and the estimate is 0 if no event was seen).
    """
    return _run(problem, None, rule or StoppingRule(), seed, "crude", chunk_size, workers)


def is_estimate(problem, proposal: dict, rule: StoppingRule | None = None, seed: int = 0, *,
                method: str = "is", chunk_size: int = 10_000, workers: int = 1) -> EstimationResult:
    """Importance-sampling estimate of the event probability.

    Args:
        problem: a problem exposing ``variables()`` and ``run``.
        proposal: accelerated distributions keyed by variable name; variables
            not listed are drawn from the original.
        rule: stopping rule; defaults to alpha = beta = 0.2.
        seed: root seed.  Matching seeds give matching uniforms, so an
            identity proposal reproduces :func:`crude_mc` exactly.

    Raises:
        SupportError: a proposal puts zero density where the original does not.
        KeyError: the proposal names a variable the problem does not have.
    """
    originals = problem.variables()
    for name, q in proposal.items():
        if name in originals:
            check_support(originals[name], q)
    return _run(problem, dict(proposal), rule or StoppingRule(), seed, method, chunk_size, workers)
