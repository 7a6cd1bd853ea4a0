"""Lane-change cut-in encounter: sampling and ego-vehicle (ACC + AEB) simulation.

The lead vehicle cuts in at range ``r_l`` and holds speed ``v_l``.  The ego
starts ``r_l / ttc_l`` faster than the lead and reacts with a constant
time-headway ACC that is overridden by latched full braking (AEB) once the
instantaneous time-to-collision drops below a threshold.  Commands reach the
wheels after a pure actuator delay.

The integrator is event driven: between ACC updates (every ``step``
seconds) the applied acceleration is piecewise constant, so range and range
rate are advanced in closed form and the AEB trigger, the collision and the
end of closure are located exactly inside a step.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from . import distributions as dist

SEGMENTS = (5.0, 15.0, 25.0, 35.0)


@dataclass(frozen=True)
class LaneChangeEvent:
    v_l: float
    r_l: float
    ttc_l: float

    def __post_init__(self):
        if not (self.v_l > 0 and self.r_l > 0 and self.ttc_l > 0):
            raise ValueError(f"event needs positive v_l, r_l, ttc_l: {self}")

    @property
    def range_rate(self) -> float:
        return -self.r_l / self.ttc_l


@dataclass(frozen=True)
class EgoConfig:
    """Ego controller and integration settings (SI units).

    ACC command: ``min(gap_gain*(R - headway*v) + speed_diff_gain*Rdot,
    cruise_gain*(v_set - v))`` clipped to ``[-comfort_decel, max_accel]``,
    where ``v_set`` is the ego speed at cut-in.
    """

    headway: float = 1.5
    gap_gain: float = 0.2
    speed_diff_gain: float = 0.6
    aeb_ttc: float = 1.5
    max_decel: float = 8.0
    delay: float = 0.1
    step: float = 0.01
    horizon: float = 15.0
    cruise_gain: float = 0.5
    max_accel: float = 2.0
    comfort_decel: float = 3.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.step > 0.1:
            raise ValueError("step must not exceed 0.1 s")
        if self.horizon < 5.0:
            raise ValueError("horizon must be at least 5 s")

    def params(self) -> np.ndarray:
        return np.array([
            self.headway, self.gap_gain, self.speed_diff_gain, self.cruise_gain,
            self.aeb_ttc, self.max_decel, self.max_accel, self.comfort_decel,
            self.delay, self.step, self.horizon,
        ])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "EgoConfig":
        return cls(**doc)


# ---------------------------------------------------------------------------
# kernel

_EPS = 1e-12


@njit(cache=True, nogil=True)
def _first_root(c0, c1, c2, tmax):
    """Smallest tau in (0, tmax] with c0 + c1 tau + c2 tau^2 = 0, given c0 > 0."""
    if c0 <= 0.0:
        return 0.0
    best = np.inf
    if c2 == 0.0:
        if c1 < 0.0:
            best = -c0 / c1
    else:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc >= 0.0:
            sq = math.sqrt(disc)
            q = -0.5 * (c1 + math.copysign(sq, c1))
            if q != 0.0:
                for r in (q / c2, c0 / q):
                    if 0.0 < r < best:
                        best = r
    if best <= tmax:
        return best
    return np.inf


@njit(cache=True, nogil=True)
def _acc_command(R, c, v, v_set, p):
    gap = p[1] * (R - p[0] * v) - p[2] * c
    cruise = p[3] * (v_set - v)
    a = min(gap, cruise)
    return min(max(a, -p[7]), p[6])


@njit(cache=True, nogil=True)
def _run(v_l, r_l, ttc_l, p, buf):
    """Simulate one encounter; returns (crashed, min_range, rows written to buf)."""
    aeb, b, delay, dt, horizon = p[4], p[5], p[8], p[9], p[10]
    c = r_l / ttc_l if np.isfinite(ttc_l) else 0.0
    R = r_l
    nbuf = buf.shape[0]
    rows = 0
    if not (c > 0.0) or not np.isfinite(R):
        if nbuf > 0:
            buf[0, 0] = 0.0
            buf[0, 1] = R
            buf[0, 2] = -c
            buf[0, 3] = v_l + c
            buf[0, 4] = 0.0
            rows = 1
        return 0, R, rows
    v = v_l + c
    v_set = v
    t = 0.0
    ncap = int(horizon / dt) + 4
    cmd_t = np.empty(ncap)
    cmd_a = np.empty(ncap)
    latched = R - aeb * c <= 0.0
    cmd_t[0] = 0.0
    cmd_a[0] = -b if latched else _acc_command(R, c, v, v_set, p)
    ncmd = 1
    k = 1
    ai = -1
    while True:
        while ai + 1 < ncmd and cmd_t[ai + 1] + delay <= t + _EPS:
            ai += 1
        a = cmd_a[ai] if ai >= 0 else 0.0
        if rows < nbuf:
            buf[rows, 0] = t
            buf[rows, 1] = R
            buf[rows, 2] = -c
            buf[rows, 3] = v
            buf[rows, 4] = a
            rows += 1
        t_grid = np.inf if latched else k * dt
        t_chg = cmd_t[ai + 1] + delay if ai + 1 < ncmd else np.inf
        t_end = min(t_grid, t_chg, horizon)
        tau = t_end - t
        tau_c = -c / a if a < 0.0 else np.inf
        span = min(tau, tau_c)
        tau_x = _first_root(R, -c, -0.5 * a, span)
        if np.isfinite(tau_x):
            t += tau_x
            if rows < nbuf:
                buf[rows, 0] = t
                buf[rows, 1] = 0.0
                buf[rows, 2] = -(c + a * tau_x)
                buf[rows, 3] = v + a * tau_x
                buf[rows, 4] = a
                rows += 1
            return 1, 0.0, rows
        tau_g = np.inf
        if not latched:
            tau_g = _first_root(R - aeb * c, -c - aeb * a, -0.5 * a, span)
        if tau_c <= tau and tau_c <= tau_g:
            R -= c * tau_c + 0.5 * a * tau_c * tau_c
            v += a * tau_c
            t += tau_c
            if rows < nbuf:
                buf[rows, 0] = t
                buf[rows, 1] = R
                buf[rows, 2] = 0.0
                buf[rows, 3] = v
                buf[rows, 4] = a
                rows += 1
            return 0, R, rows
        step = tau_g if tau_g < tau else tau
        R -= c * step + 0.5 * a * step * step
        c += a * step
        v += a * step
        if step == tau:
            t = t_end
        else:
            t += step
        if tau_g < tau:
            latched = True
            cmd_t[ncmd] = t
            cmd_a[ncmd] = -b
            ncmd += 1
            continue
        if t >= horizon - _EPS:
            return 0, R, rows
        if not latched and abs(t - t_grid) <= _EPS:
            if R - aeb * c <= 0.0:
                latched = True
                cmd_t[ncmd] = t
                cmd_a[ncmd] = -b
            else:
                cmd_t[ncmd] = t
                cmd_a[ncmd] = _acc_command(R, c, v, v_set, p)
            ncmd += 1
            k += 1


@njit(cache=True, nogil=True)
def _run_batch(v_l, r_l, ttc_l, p):
    n = v_l.shape[0]
    crashed = np.zeros(n, dtype=np.bool_)
    min_range = np.empty(n)
    buf = np.empty((0, 5))
    for i in range(n):
        hit, mr, _ = _run(v_l[i], r_l[i], ttc_l[i], p, buf)
        crashed[i] = hit == 1
        min_range[i] = mr
    return crashed, min_range


@dataclass
class SimulationResult:
    crashed: int
    min_range: float
    trace: np.ndarray = field(repr=False)

    @property
    def columns(self) -> tuple:
        return ("t", "range", "range_rate", "ego_speed", "ego_accel")


def simulate(event: LaneChangeEvent, ego: EgoConfig | None = None) -> SimulationResult:
    """Run one encounter and keep the state trace."""
    ego = ego or EgoConfig()
    buf = np.empty((2 * int(ego.horizon / ego.step) + 16, 5))
    hit, mr, rows = _run(float(event.v_l), float(event.r_l), float(event.ttc_l), ego.params(), buf)
    return SimulationResult(int(hit), float(mr), buf[:rows].copy())


def indicator(event: LaneChangeEvent, ego: EgoConfig | None = None) -> int:
    return simulate(event, ego).crashed


def simulate_batch(v_l, r_l, ttc_l, ego: EgoConfig | None = None):
    """Vectorized outcomes: (crashed bool array, min_range array)."""
    ego = ego or EgoConfig()
    v = np.ascontiguousarray(v_l, dtype=float)
    r = np.ascontiguousarray(r_l, dtype=float)
    t = np.ascontiguousarray(ttc_l, dtype=float)
    return _run_batch(v, r, t, ego.params())


# ---------------------------------------------------------------------------
# statistical encounter model


@dataclass(frozen=True)
class SpeedSampler:
    """Lead-speed sampler: uniform on [low, high] or resampling of observed values."""

    kind: str = "uniform"
    low: float = 5.0
    high: float = 35.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "uniform":
            if not 0 < self.low < self.high:
                raise ValueError("uniform speed sampler needs 0 < low < high")
        elif self.kind == "empirical":
            vals = np.sort(np.asarray(self.values, dtype=float))
            if vals.size == 0 or vals[0] <= 0:
                raise ValueError("empirical speed sampler needs positive values")
            object.__setattr__(self, "values", tuple(float(v) for v in vals))
            object.__setattr__(self, "low", float(vals[0]))
            object.__setattr__(self, "high", float(vals[-1]))
        else:
            raise ValueError(f"unknown speed sampler kind {self.kind!r}")

    def ppf(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            return self.low + u * (self.high - self.low)
        vals = np.asarray(self.values)
        return vals[np.minimum((u * vals.size).astype(np.int64), vals.size - 1)]

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "low": self.low, "high": self.high}
        return {"kind": "empirical", "values": list(self.values)}

    @classmethod
    def from_dict(cls, doc: dict) -> "SpeedSampler":
        if doc["kind"] == "uniform":
            return cls("uniform", doc["low"], doc["high"])
        return cls("empirical", values=tuple(doc["values"]))


@dataclass(frozen=True)
class ScenarioModel:
    """Segmented encounter model.

    ``ttc_inv[s]`` is the distribution of 1/TTC for lead speeds in segment
    ``s`` (``segments`` holds the edges); ``range_inv`` is the distribution
    of 1/R, independent of everything else.
    """

    speed: SpeedSampler
    ttc_inv: tuple
    range_inv: object
    segments: tuple = SEGMENTS
    name: str = ""
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "ttc_inv", tuple(self.ttc_inv))
        object.__setattr__(self, "segments", tuple(float(s) for s in self.segments))
        if len(self.ttc_inv) != len(self.segments) - 1:
            raise ValueError("need one 1/TTC distribution per speed segment")
        if np.any(np.diff(self.segments) <= 0):
            raise ValueError("segment edges must increase")
        if self.speed.low < self.segments[0] or self.speed.high > self.segments[-1]:
            raise ValueError("speed segments do not cover the lead-speed sampler")

    @property
    def n_segments(self) -> int:
        return len(self.ttc_inv)

    def segment_of(self, v_l) -> np.ndarray:
        inner = np.asarray(self.segments[1:-1])
        return np.searchsorted(inner, np.asarray(v_l, dtype=float), side="right")

    def variables(self) -> dict:
        """Original distributions of the accelerable variables, by name."""
        out = {f"ttc_inv/{s}": d for s, d in enumerate(self.ttc_inv)}
        out["range_inv"] = self.range_inv
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "name": self.name,
            "seed": self.seed,
            "speed": self.speed.to_dict(),
            "segments": list(self.segments),
            "ttc_inv": [dist.to_dict(d) for d in self.ttc_inv],
            "range_inv": dist.to_dict(self.range_inv),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioModel":
        return cls(
            speed=SpeedSampler.from_dict(doc["speed"]),
            ttc_inv=tuple(dist.from_dict(d) for d in doc["ttc_inv"]),
            range_inv=dist.from_dict(doc["range_inv"]),
            segments=tuple(doc["segments"]),
            name=doc.get("name", ""),
            seed=doc.get("seed"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, s: str) -> "ScenarioModel":
        return cls.from_dict(json.loads(s))


def draw_inputs(model: ScenarioModel, u: np.ndarray, proposal: dict | None = None):
    """Map uniforms u (shape (3, n)) to (v_l, ttc_inv, range_inv, segment).

    ``proposal`` optionally replaces the distributions named in
    :meth:`ScenarioModel.variables` (acceleration).
    """
    names = model.variables()
    if proposal:
        names.update(proposal)
    v = model.speed.ppf(u[0])
    seg = model.segment_of(v)
    ttc_inv = np.empty_like(v)
    for s in range(model.n_segments):
        m = seg == s
        if m.any():
            ttc_inv[m] = names[f"ttc_inv/{s}"].ppf(u[1][m])
    range_inv = names["range_inv"].ppf(u[2])
    return v, ttc_inv, range_inv, seg


def to_events(ttc_inv, range_inv):
    """Convert inverse variables to (r_l, ttc_l); zero inverses map to inf."""
    with np.errstate(divide="ignore"):
        return 1.0 / np.asarray(range_inv), 1.0 / np.asarray(ttc_inv)


def sample_event(model: ScenarioModel, rng: np.random.Generator) -> LaneChangeEvent:
    v, ti, ri, _ = draw_inputs(model, rng.random((3, 1)))
    r, t = to_events(ti, ri)
    return LaneChangeEvent(float(v[0]), float(r[0]), float(t[0]))


def sample_events(model: ScenarioModel, rng: np.random.Generator, n: int):
    """Arrays (v_l, r_l, ttc_l) of n encounters from the original model."""
    v, ti, ri, _ = draw_inputs(model, rng.random((3, n)))
    r, t = to_events(ti, ri)
    return v, r, t


# ---------------------------------------------------------------------------
# synthetic ground truth


def _ttc_piece(body_w, body_scales, cut, tail_rate, tail_w):
    inf = math.inf
    return dist.PiecewiseMixture(
        (cut,), (1.0 - tail_w, tail_w),
        (dist.MixtureBoundedNormal(body_w, body_scales, 0.0, cut),
         dist.BoundedExponential(tail_rate, cut, inf)),
    )


def _range_inv(bounds, weights, rates):
    pieces = tuple(dist.BoundedExponential(r, a, b) for r, a, b in zip(rates, bounds[:-1], bounds[1:]))
    return dist.PiecewiseMixture(bounds[1:-1], weights, pieces)


PRESETS = ("desk-rare", "desk-common", "desk-rare-pool")


def synthetic_model(profile: str = "desk-rare", seed: int = 0) -> ScenarioModel:
    """Ground-truth encounter model standing in for naturalistic data.

    1/R lives on [1/80, inf) (cut-ins closer than 80 m) in three exponential
    pieces; 1/TTC per speed segment is a two-normal body on [0, 0.15) with an
    exponential tail.

    * ``desk-rare``: crash probability about 6e-5 under the default ego.
    * ``desk-common``: heavier 1/TTC tails, crash probability near 2e-3.
    * ``desk-rare-pool``: ``desk-rare`` with lead speeds resampled from a pool
      of 5000 draws generated from ``seed``.
    """
    if profile not in PRESETS:
        raise ValueError(f"unknown preset {profile!r}; available: {PRESETS}")
    range_inv = _range_inv((0.0125, 0.04, 0.12, math.inf), (0.3, 0.6, 0.1), (20.0, 10.0, 15.0))
    if profile == "desk-common":
        tails, tail_w = (6.0, 7.0, 8.0), 0.08
    else:
        tails, tail_w = (17.0, 18.0, 19.0), 0.06
    ttc = tuple(_ttc_piece((0.7, 0.3), (0.03, 0.09), 0.15, rate, tail_w) for rate in tails)
    speed = SpeedSampler("uniform", 5.0, 35.0)
    if profile == "desk-rare-pool":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5EED,)))
        speed = SpeedSampler("empirical", values=tuple(np.round(rng.uniform(5.0, 35.0, 5000), 6)))
    return ScenarioModel(speed, ttc, range_inv, SEGMENTS, profile, seed)
