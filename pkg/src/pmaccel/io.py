"""Event CSV files, problem documents and deterministic JSON output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import distributions as dist
from .problems import BernoulliProblem, ScenarioProblem, TailProblem
from .scenario import EgoConfig, ScenarioModel, synthetic_model

CSV_HEADER = ("v_l", "r_l", "ttc_l")
SCHEMA_VERSION = 1


class InputError(ValueError):
    """Bad user input (missing file, malformed row, invalid config)."""


def read_events(path) -> tuple:
    """Read a ``v_l,r_l,ttc_l`` CSV into three float arrays.

    ``ttc_l`` may be ``inf`` (no closure).  Errors name the offending line.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: empty file (expected header {','.join(CSV_HEADER)})")
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise InputError(f"{path}:1: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise InputError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            try:
                v, r, t = (float(f) for f in row)
            except ValueError:
                raise InputError(f"{path}:{line}: non-numeric field in {row!r}") from None
            if not (math.isfinite(v) and math.isfinite(r) and v > 0 and r > 0 and t > 0):
                raise InputError(f"{path}:{line}: need v_l > 0, r_l > 0 (finite) and ttc_l > 0")
            rows.append((v, r, t))
    if not rows:
        raise InputError(f"{path}: no events")
    arr = np.asarray(rows, dtype=float)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def write_events(path, v_l, r_l, ttc_l) -> None:
    with Path(path).open("w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for v, r, t in zip(v_l, r_l, ttc_l):
            fh.write(f"{float(v)!r},{float(r)!r},{float(t)!r}\n")


def dump_json(doc, path=None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def load_model(path) -> ScenarioModel:
    try:
        return ScenarioModel.from_dict(load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: not a scenario model ({exc})") from None


def problem_from_dict(doc: dict, ego: EgoConfig | None = None):
    """Build a problem from a document.

    Kinds: ``{"kind": "bernoulli", "p": ...}``,
    ``{"kind": "tail", "distribution": {...}, "threshold": ...}``,
    ``{"kind": "scenario", "preset": name}`` or ``{"kind": "scenario", "model": {...}}``.
    """
    kind = doc.get("kind")
    try:
        if kind == "bernoulli":
            return BernoulliProblem(float(doc["p"]))
        if kind == "tail":
            return TailProblem(dist.from_dict(doc["distribution"]), float(doc["threshold"]))
        if kind == "scenario":
            if "preset" in doc:
                model = synthetic_model(doc["preset"], int(doc.get("seed", 0)))
            else:
                model = ScenarioModel.from_dict(doc["model"])
            return ScenarioProblem(model, ego, doc.get("severity", "relative"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid {kind} problem: {exc}") from None
    raise InputError(f"unknown problem kind {kind!r}")
