"""``pmaccel`` command line: generate, fit, tune, evaluate, compare.

Every command reads an optional JSON config (``--config``) whose top-level
keys mirror the long flag names (dashes become underscores); flags given on
the command line win.  Nested blocks ``rule``, ``ego``, ``ce`` and ``fit``
hold :class:`StoppingRule`, :class:`EgoConfig`, :class:`CEConfig` and
fitting settings.  A seed is mandatory.

Random streams: ``generate`` draws from ``SeedSequence(seed,
spawn_key=(GENERATE_STREAM,))``; estimators use chunk streams split from
the seed (see :mod:`pmaccel.estimation`); cross entropy runs on a stream
split from the seed by :func:`pmaccel.harness.derived_seed`.

Exit codes: 0 success, 2 input error, 3 no convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import distributions as dist
from .cross_entropy import CEConfig, CEError, cross_entropy_tune
from .estimation import StoppingRule, crude_mc, is_estimate
from .fitting import FitConfig, fit_piecewise, fit_single_baselines
from .harness import METHODS, compare_harness, derived_seed
from .io import (SCHEMA_VERSION, InputError, dump_json, load_json, load_model, problem_from_dict,
                 read_events, write_events)
from .problems import ScenarioProblem
from .scenario import PRESETS, SEGMENTS, EgoConfig, ScenarioModel, SpeedSampler, sample_events, synthetic_model

log = logging.getLogger("pmaccel")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 2, 3
GENERATE_STREAM = 4
SPEED_GRID = 2000


# ---------------------------------------------------------------------------
# configuration


def _settings(args) -> dict:
    cfg = load_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise InputError(f"{args.config}: config must be a JSON object")
    for key, value in vars(args).items():
        if key not in ("command", "config", "func") and value is not None:
            cfg[key] = value
    if cfg.get("seed") is None:
        raise InputError("a seed is required (--seed or \"seed\" in the config)")
    cfg["seed"] = int(cfg["seed"])
    return cfg


def _block(cfg, name, cls):
    try:
        return cls.from_dict(cfg.get(name, {}))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid {name!r} block: {exc}") from None


def _problem(cfg):
    ego = _block(cfg, "ego", EgoConfig)
    if cfg.get("problem") is not None:
        doc = cfg["problem"]
        if isinstance(doc, str):
            doc = load_json(doc)
        return problem_from_dict(doc, ego)
    if cfg.get("model"):
        return ScenarioProblem(load_model(cfg["model"]), ego)
    preset = cfg.get("preset")
    if preset is None:
        raise InputError("name a problem, a model file or a preset")
    if preset not in PRESETS:
        raise InputError(f"unknown preset {preset!r}; available: {', '.join(PRESETS)}")
    return ScenarioProblem(synthetic_model(preset, cfg["seed"]), ego)


def _ce_config(cfg, family=None) -> CEConfig:
    ce = _block(cfg, "ce", CEConfig)
    fam = family or cfg.get("family")
    return replace(ce, family=fam) if fam else ce


def _out(cfg, key, default):
    p = Path(cfg.get(key) or default)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _tune(problem, cfg, family=None):
    ce_cfg = _ce_config(cfg, family)
    res = cross_entropy_tune(problem, ce_cfg, derived_seed(cfg["seed"], 2000))
    return res, ce_cfg


# ---------------------------------------------------------------------------
# commands


def cmd_generate(cfg) -> int:
    preset = cfg.get("preset", "desk-rare")
    if preset not in PRESETS:
        raise InputError(f"unknown preset {preset!r}; available: {', '.join(PRESETS)}")
    n = int(cfg.get("n", 100_000))
    if n < 0:
        raise InputError("n must be non-negative")
    model = synthetic_model(preset, cfg["seed"])
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"], spawn_key=(GENERATE_STREAM,)))
    out = _out(cfg, "out", "events.csv")
    if n == 0:
        log.warning("n=0: writing a header-only file")
        write_events(out, [], [], [])
    else:
        write_events(out, *sample_events(model, rng, n))
    dump_json(model.to_dict(), _out(cfg, "model_out", out.with_suffix(".model.json")))
    print(f"wrote {n} events to {out}")
    return EXIT_OK


def _fit_config(block: dict, default: FitConfig, seed: int) -> FitConfig:
    doc = default.to_dict()
    doc.update(block or {})
    doc["seed"] = seed
    try:
        return FitConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid fit block: {exc}") from None


def fit_scenario(v_l, r_l, ttc_l, fit: dict | None = None, seed: int = 0):
    """Fit piecewise and single-distribution scenario models to events.

    Returns ``(piecewise_model, single_model, report)``.  1/TTC is fitted per
    lead-speed segment, 1/R once; the lead-speed sampler resamples a grid of
    empirical speed quantiles.  ``fit`` may hold ``"ttc"`` and ``"range"``
    FitConfig blocks and ``"range_lower"`` (a number, or ``"min"`` for the
    smallest observed 1/R, the default).
    """
    fit = fit or {}
    v = np.asarray(v_l, float)
    range_inv = 1.0 / np.asarray(r_l, float)
    with np.errstate(divide="ignore"):
        ttc_inv = 1.0 / np.asarray(ttc_l, float)
    edges = (min(SEGMENTS[0], float(v.min())), *SEGMENTS[1:-1], max(SEGMENTS[-1], float(v.max())))
    speed = SpeedSampler("empirical", values=tuple(np.quantile(v, (np.arange(SPEED_GRID) + 0.5) / SPEED_GRID)))
    seg = np.searchsorted(np.asarray(edges[1:-1]), v, side="right")

    lower = fit.get("range_lower", "min")
    lower = float(range_inv.min()) if lower == "min" else float(lower)
    range_cfg = _fit_config(fit.get("range"), FitConfig.range_model(lower=lower), derived_seed(seed, 3000))
    report = {"schema_version": SCHEMA_VERSION, "n_events": int(v.size), "segments": list(edges)}
    try:
        range_pw, range_rep = fit_piecewise(range_inv, range_cfg)
        range_exp, range_pareto = fit_single_baselines(range_inv)
        report["range_inv"] = {"config": range_cfg.to_dict(), "piecewise": range_rep.to_dict(),
                               "exponential": dist.to_dict(range_exp), "pareto": dist.to_dict(range_pareto)}
        ttc_pw, ttc_exp, ttc_reports = [], [], []
        for s in range(len(edges) - 1):
            x = ttc_inv[seg == s]
            cfg = _fit_config(fit.get("ttc"), FitConfig.ttc_model(), derived_seed(seed, 3001 + s))
            if x.size == 0:
                raise ValueError(f"no events in lead-speed segment [{edges[s]}, {edges[s + 1]})")
            d, rep = fit_piecewise(x, cfg)
            ttc_pw.append(d)
            ttc_exp.append(dist.exponential(1.0 / float(np.mean(x))))
            ttc_reports.append({"config": cfg.to_dict(), "n": int(x.size), "piecewise": rep.to_dict(),
                                "exponential": dist.to_dict(ttc_exp[-1])})
        report["ttc_inv"] = ttc_reports
    except ValueError as exc:
        raise InputError(f"fit failed: {exc}") from None
    pw = ScenarioModel(speed, ttc_pw, range_pw, edges, "fitted-piecewise", seed)
    single = ScenarioModel(speed, ttc_exp, range_exp, edges, "fitted-single", seed)
    return pw, single, report


def cmd_fit(cfg) -> int:
    if not cfg.get("input"):
        raise InputError("fit needs --input CSV")
    v, r, t = read_events(cfg["input"])
    pw, single, report = fit_scenario(v, r, t, cfg.get("fit"), cfg["seed"])
    out_dir = Path(cfg.get("out_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_json(pw.to_dict(), out_dir / "model_piecewise.json")
    dump_json(single.to_dict(), out_dir / "model_single.json")
    dump_json(report, out_dir / "fit_report.json")
    print(f"fitted {v.size} events; models written to {out_dir}")
    return EXIT_OK


def cmd_tune(cfg) -> int:
    problem = _problem(cfg)
    try:
        res, ce_cfg = _tune(problem, cfg)
    except CEError as exc:
        log.error("%s", exc)
        dump_json({"schema_version": SCHEMA_VERSION, "error": str(exc), "diagnostics": exc.diagnostics},
                  _out(cfg, "out", "proposal.json"))
        return EXIT_NOT_CONVERGED
    doc = {"schema_version": SCHEMA_VERSION, "seed": cfg["seed"], "ce": ce_cfg.to_dict(), **res.to_dict()}
    dump_json(doc, _out(cfg, "out", "proposal.json"))
    print(f"tuned {len(res.proposal)} variables in {res.iterations} iterations (reached={res.reached})")
    return EXIT_OK if res.reached else EXIT_NOT_CONVERGED


def _load_proposal(path) -> dict:
    doc = load_json(path)
    try:
        return {k: dist.from_dict(v) for k, v in doc["proposal"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a proposal document ({exc})") from None


def cmd_evaluate(cfg) -> int:
    problem = _problem(cfg)
    rule = _block(cfg, "rule", StoppingRule)
    mode = cfg.get("mode", "crude")
    workers = int(cfg.get("workers") or os.cpu_count() or 1)
    seed = cfg["seed"]
    extra = {}
    if mode == "crude":
        res = crude_mc(problem, rule, seed, workers=workers)
    elif mode == "is":
        if cfg.get("tune"):
            try:
                ce, ce_cfg = _tune(problem, cfg)
            except CEError as exc:
                log.error("%s", exc)
                return EXIT_NOT_CONVERGED
            proposal = ce.proposal
            extra = {"tuning": {"ce": ce_cfg.to_dict(), **ce.to_dict()}}
        elif cfg.get("proposal"):
            proposal = _load_proposal(cfg["proposal"])
        elif cfg.get("identity"):
            proposal = problem.variables()
        else:
            raise InputError("mode 'is' needs --tune, --proposal FILE or --identity")
        res = is_estimate(problem, proposal, rule, seed, workers=workers)
        extra.setdefault("proposal", {k: dist.to_dict(v) for k, v in proposal.items()})
    else:
        raise InputError(f"unknown mode {mode!r}; use 'crude' or 'is'")
    doc = res.to_dict()
    doc.update(extra)
    out = _out(cfg, "out", "result.json")
    dump_json(doc, out)
    _out(cfg, "trace", out.with_suffix(".trace.csv")).write_text(res.trace_csv(), encoding="utf-8")
    print(f"P_hat={res.estimate:.6g} N={res.n_samples} rel_half_width={res.rel_half_width:.4g} "
          f"converged={res.converged}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_compare(cfg) -> int:
    problem = _problem(cfg)
    rule = _block(cfg, "rule", StoppingRule)
    methods = cfg.get("methods") or list(METHODS)
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise InputError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    workers = int(cfg.get("workers") or os.cpu_count() or 1)
    table = compare_harness(problem, methods, int(cfg.get("repeats", 10)), rule, cfg["seed"],
                            _ce_config(cfg), workers=workers)
    out = _out(cfg, "out", "comparison.json")
    dump_json(table.to_dict(), out)
    _out(cfg, "trace", out.with_suffix(".trace.csv")).write_text(table.traces_csv(), encoding="utf-8")
    print(table.to_text())
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmaccel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file")
        return p

    def problem_args(p):
        p.add_argument("--preset", choices=PRESETS)
        p.add_argument("--model", help="scenario model JSON")
        p.add_argument("--problem", help="problem JSON (bernoulli / tail / scenario)")
        p.add_argument("--workers", type=int, help="worker threads (default: logical cores)")

    p = common(sub.add_parser("generate", help="write synthetic events from a preset"))
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--n", type=int)
    p.add_argument("--model-out", help="ground-truth model JSON path")
    p.set_defaults(func=cmd_generate)

    p = common(sub.add_parser("fit", help="fit piecewise and single models to an event CSV"))
    p.add_argument("--input")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_fit)

    p = common(sub.add_parser("tune", help="cross-entropy tuning of accelerated distributions"))
    problem_args(p)
    p.add_argument("--family", choices=("piecewise", "single"))
    p.set_defaults(func=cmd_tune)

    p = common(sub.add_parser("evaluate", help="crude or importance-sampling estimate"))
    problem_args(p)
    p.add_argument("--mode", choices=("crude", "is"))
    p.add_argument("--proposal", help="proposal JSON written by 'tune'")
    p.add_argument("--tune", action="store_true", default=None, help="tune a proposal first")
    p.add_argument("--identity", action="store_true", default=None, help="use the originals as proposal")
    p.add_argument("--family", choices=("piecewise", "single"))
    p.add_argument("--trace", help="trace CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = common(sub.add_parser("compare", help="piecewise vs single vs crude table"))
    problem_args(p)
    p.add_argument("--methods", help="comma-separated subset of piecewise,single,crude")
    p.add_argument("--repeats", type=int)
    p.add_argument("--trace", help="trace CSV path")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(_settings(args))
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
