"""Side-by-side comparison of crude and accelerated estimators.

Every method is run ``repeats`` times; repeat ``r`` evaluates with the same
derived seed for every method (common random numbers).  Accelerated methods
are tuned once by cross entropy before their repeats; the tuning cost is
reported separately from the samples-to-convergence.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cross_entropy import CEConfig, cross_entropy_tune
from .estimation import EstimationResult, StoppingRule, crude_mc, is_estimate

HARNESS_STREAM = 3
METHODS = ("piecewise", "single", "crude")
LABELS = {"piecewise": "Piecewise", "single": "Single", "crude": "Crude"}


def derived_seed(seed: int, *key: int) -> int:
    """Integer seed for a sub-task, split from ``seed`` by ``key``."""
    ss = np.random.SeedSequence(seed, spawn_key=(HARNESS_STREAM, *key))
    return int(ss.generate_state(1, np.uint32)[0])


@dataclass
class MethodRow:
    method: str
    runs: list = field(default_factory=list, repr=False)
    ce: object = None
    error: str | None = None
    ratio: float | None = None

    @property
    def label(self) -> str:
        return LABELS.get(self.method, self.method)

    @property
    def n_mean(self) -> float:
        return float(np.mean([r.n_samples for r in self.runs])) if self.runs else math.nan

    @property
    def estimate_mean(self) -> float:
        return float(np.mean([r.estimate for r in self.runs])) if self.runs else math.nan

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "label": self.label,
            "N": None if math.isnan(self.n_mean) else self.n_mean,
            "ratio": self.ratio,
            "estimate": None if math.isnan(self.estimate_mean) else self.estimate_mean,
            "converged": sum(r.converged for r in self.runs),
            "repeats": [r.to_dict() for r in self.runs],
            "error": self.error,
        }
        if self.ce is not None:
            out["tuning"] = self.ce.to_dict()
        return out


@dataclass
class ComparisonTable:
    rows: list
    rule: StoppingRule
    seed: int

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "seed": self.seed,
            "rule": self.rule.to_dict(),
            "columns": ["N", "ratio"],
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_text(self) -> str:
        lines = [f"{'':<10} {'N':>12} {'ratio':>10} {'P_hat':>12}"]
        for r in self.rows:
            if r.error:
                lines.append(f"{r.label:<10} failed: {r.error}")
                continue
            ratio = "-" if r.ratio is None else f"{r.ratio:.3g}"
            lines.append(f"{r.label:<10} {r.n_mean:>12.4g} {ratio:>10} {r.estimate_mean:>12.4g}")
        return "\n".join(lines)

    def traces_csv(self) -> str:
        buf = io.StringIO()
        buf.write("method,repeat,n,estimate,rel_half_width\n")
        for r in self.rows:
            for k, run in enumerate(r.runs):
                for n, est, rhw in run.trace:
                    buf.write(f"{r.method},{k},{int(n)},{est!r},{rhw!r}\n")
        return buf.getvalue()


def compare_harness(problem, methods=METHODS, repeats: int = 10, rule: StoppingRule | None = None,
                    seed: int = 0, ce_config: CEConfig | None = None, *, workers: int = 1,
                    chunk_size: int = 10_000) -> ComparisonTable:
    """Run each method ``repeats`` times and tabulate mean samples to convergence.

    Ratios are mean N divided by the piecewise mean N (None when the
    piecewise method is absent or failed).  A failing method is recorded on
    its row and the others proceed.
    """
    rule = rule or StoppingRule()
    ce_config = ce_config or CEConfig()
    rows = []
    for m_idx, method in enumerate(methods):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        row = MethodRow(method)
        try:
            proposal = None
            if method != "crude":
                cfg = replace(ce_config, family=method)
                row.ce = cross_entropy_tune(problem, cfg, derived_seed(seed, 1000 + m_idx))
                proposal = row.ce.proposal
            for r in range(repeats):
                s = derived_seed(seed, r)
                if proposal is None:
                    res: EstimationResult = crude_mc(problem, rule, s, chunk_size=chunk_size, workers=workers)
                else:
                    res = is_estimate(problem, proposal, rule, s, method=method,
                                      chunk_size=chunk_size, workers=workers)
                row.runs.append(res)
        except Exception as exc:  # recorded per row by design
            row.error = f"{type(exc).__name__}: {exc}"
            row.runs = []
        rows.append(row)
    base = next((r for r in rows if r.method == "piecewise" and r.runs), None)
    for r in rows:
        if base is not None and r.runs:
            r.ratio = 1.0 if r is base else r.n_mean / base.n_mean
    return ComparisonTable(rows, rule, seed)
