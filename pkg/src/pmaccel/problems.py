"""Rare-event problems the estimators and the cross-entropy tuner run on.

A problem names its accelerable input variables (``variables()``), maps a
random stream to a batch of outcomes under a proposal (``run``), and reports
for every sample the event indicator, a severity score (the event is
``severity <= 0``), the log likelihood ratio against the original measure,
and the per-variable draws used for tuning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import log_likelihood_ratio
from .scenario import EgoConfig, ScenarioModel, draw_inputs, simulate_batch, to_events


@dataclass
class Batch:
    indicator: np.ndarray
    severity: np.ndarray
    log_weight: np.ndarray
    draws: dict  # name -> (values, mask of samples that used this variable)

    @property
    def weight(self) -> np.ndarray:
        return np.exp(self.log_weight)


def _proposal_for(variables: dict, proposal: dict | None) -> dict:
    out = dict(variables)
    if proposal:
        unknown = set(proposal) - set(variables)
        if unknown:
            raise KeyError(f"proposal names unknown variables: {sorted(unknown)}")
        out.update(proposal)
    return out


class TailProblem:
    """P(X > threshold) for one random variable X."""

    def __init__(self, distribution, threshold: float):
        self.distribution = distribution
        self.threshold = float(threshold)

    def variables(self) -> dict:
        return {"x": self.distribution}

    def run(self, rng: np.random.Generator, n: int, proposal: dict | None = None) -> Batch:
        q = _proposal_for(self.variables(), proposal)["x"]
        x = q.ppf(rng.random(n))
        logw = log_likelihood_ratio(self.distribution, q, x)
        return Batch(x > self.threshold, self.threshold - x, np.asarray(logw, float),
                     {"x": (x, np.ones(n, dtype=bool))})


class BernoulliProblem:
    """Event with fixed probability ``p`` and nothing to accelerate."""

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.p = float(p)

    def variables(self) -> dict:
        return {}

    def run(self, rng: np.random.Generator, n: int, proposal: dict | None = None) -> Batch:
        _proposal_for({}, proposal)
        u = rng.random(n)
        return Batch(u < self.p, u - self.p, np.zeros(n), {})


class ScenarioProblem:
    """Crash of the ego vehicle in a sampled cut-in encounter.

    Accelerable variables are ``ttc_inv/<segment>`` and ``range_inv``; the
    lead speed always comes from the original sampler.

    Severity is the minimum range reached, either as is (``"min_range"``) or
    as a fraction of the cut-in range (``"relative"``, the default); both are
    0 exactly on a crash.  The relative score keeps the cross-entropy search
    away from cut-ins that start very close but never close in.
    """

    SEVERITIES = ("relative", "min_range")

    def __init__(self, model: ScenarioModel, ego: EgoConfig | None = None, severity: str = "relative"):
        if severity not in self.SEVERITIES:
            raise ValueError(f"severity must be one of {self.SEVERITIES}")
        self.model = model
        self.ego = ego or EgoConfig()
        self.severity = severity

    def variables(self) -> dict:
        return self.model.variables()

    def run(self, rng: np.random.Generator, n: int, proposal: dict | None = None) -> Batch:
        originals = self.variables()
        q = _proposal_for(originals, proposal)
        u = rng.random((3, n))
        v, ttc_inv, range_inv, seg = draw_inputs(self.model, u, q)
        logw = np.asarray(log_likelihood_ratio(originals["range_inv"], q["range_inv"], range_inv), float)
        draws = {"range_inv": (range_inv, np.ones(n, dtype=bool))}
        for s in range(self.model.n_segments):
            name = f"ttc_inv/{s}"
            m = seg == s
            if m.any():
                logw[m] += log_likelihood_ratio(originals[name], q[name], ttc_inv[m])
            draws[name] = (ttc_inv, m)
        r_l, ttc_l = to_events(ttc_inv, range_inv)
        crashed, min_range = simulate_batch(v, r_l, ttc_l, self.ego)
        score = min_range / r_l if self.severity == "relative" else min_range
        return Batch(crashed, score, logw, draws)
