"""Bounded distributions, piecewise mixtures and their exponential tilts.

Every distribution here is a frozen object exposing ``logpdf``, ``pdf``,
``cdf``, ``ppf`` (inverse CDF), ``mean`` and ``sample``.  All of them are
vectorized over numpy arrays and accept scalars.

Bounded pieces live on half-open intervals ``[lower, upper)``; ``upper`` may
be ``inf``.  Differences of the form ``Phi(b) - Phi(a)`` and
``exp(-l a) - exp(-l b)`` are evaluated through ``log_ndtr``/``expm1`` so that
far-tail pieces keep full relative precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import special

__all__ = [
    "BoundedExponential",
    "BoundedNormal",
    "MixtureBoundedNormal",
    "PiecewiseMixture",
    "Pareto",
    "TiltedDistribution",
    "SupportError",
    "exponential",
    "pdf",
    "cdf",
    "inverse_cdf",
    "sample",
    "tilt",
    "likelihood_ratio",
    "log_likelihood_ratio",
    "to_dict",
    "from_dict",
    "dumps",
    "loads",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_ONE_MINUS = float(np.nextafter(1.0, 0.0))


class SupportError(ValueError):
    """Accelerated density vanishes where the original density does not."""


def _as_array(x):
    return np.asarray(x, dtype=float)


def _ret(out, x):
    # Scalars in, scalars out.
    return float(out) if np.ndim(x) == 0 else out


def _log1mexp(a):
    """log(1 - exp(-a)) for a > 0."""
    a = np.asarray(a, dtype=float)
    return np.where(a < math.log(2.0), np.log(-np.expm1(-a)), np.log1p(-np.exp(-a)))


# ---------------------------------------------------------------------------
# truncated exponential kernel: density proportional to exp(-r x) on [lo, hi)
# r may take any sign when hi is finite.


def _texp_logpdf(r, lo, hi, x):
    x = _as_array(x)
    w = hi - lo
    inside = (x >= lo) & (x < hi)
    with np.errstate(invalid="ignore", over="ignore"):
        if r > 0:
            lognorm = math.log(r) - (0.0 if math.isinf(w) else float(_log1mexp(r * w)))
            out = lognorm - r * (x - lo)
        elif r < 0:
            a = -r
            out = math.log(a) - float(_log1mexp(a * w)) + a * (x - hi)
        else:
            out = np.full_like(x, -math.log(w))
    return np.where(inside, out, -np.inf)


def _texp_cdf(r, lo, hi, x):
    x = _as_array(x)
    w = hi - lo
    t = np.clip(x - lo, 0.0, w)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if r > 0:
            if math.isinf(w):
                out = -np.expm1(-r * t)
            else:
                out = np.expm1(-r * t) / math.expm1(-r * w)
        elif r < 0:
            a = -r
            out = np.exp(a * (t - w) + _log1mexp(a * t) - float(_log1mexp(a * w)))
            out = np.where(t > 0, out, 0.0)
        else:
            out = t / w
    out = np.where(x < lo, 0.0, out)
    return np.where(x >= hi, 1.0, out)


def _texp_ppf(r, lo, hi, y):
    y = _as_array(y)
    w = hi - lo
    with np.errstate(divide="ignore"):
        if r > 0:
            if math.isinf(w):
                return lo - np.log1p(-y) / r
            return np.minimum(lo - np.log1p(y * math.expm1(-r * w)) / r, hi)
        if r < 0:
            a = -r
            return np.clip(hi + np.log(y + (1.0 - y) * math.exp(-a * w)) / a, lo, hi)
        return lo + y * w


def _texp_mean(r, lo, hi):
    w = hi - lo
    if math.isinf(w):
        return lo + 1.0 / r
    rw = r * w
    if abs(rw) < 1e-6:
        return lo + w / 2.0 - r * w * w / 12.0
    if rw > 700.0:
        return lo + 1.0 / r
    if rw < -700.0:
        return hi + 1.0 / r
    return lo + 1.0 / r - w / math.expm1(rw)


# ---------------------------------------------------------------------------
# truncated normal kernel N(mu, sigma^2) conditioned on [lo, hi)


def _log_norm_mass(a, b):
    """log(Phi(b) - Phi(a)) for scalars a < b."""
    if a >= 0.0:
        la, lb = special.log_ndtr(-a), special.log_ndtr(-b)
        return float(la + np.log1p(-np.exp(lb - la)))
    if b <= 0.0:
        la, lb = special.log_ndtr(a), special.log_ndtr(b)
        return float(lb + np.log1p(-np.exp(la - lb)))
    return float(np.log1p(-special.ndtr(a) - special.ndtr(-b)))


@dataclass(frozen=True)
class _TruncNormal:
    mu: float
    sigma: float
    lo: float
    hi: float
    alpha: float = field(init=False)
    beta: float = field(init=False)
    logmass: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", (self.lo - self.mu) / self.sigma)
        object.__setattr__(self, "beta", (self.hi - self.mu) / self.sigma)
        object.__setattr__(self, "logmass", _log_norm_mass(self.alpha, self.beta))
        if not np.isfinite(self.logmass):
            raise ValueError(
                f"normal(mu={self.mu}, sigma={self.sigma}) has no mass on "
                f"[{self.lo}, {self.hi})"
            )

    def logpdf(self, x):
        x = _as_array(x)
        z = (x - self.mu) / self.sigma
        out = -0.5 * z * z - _LOG_SQRT_2PI - math.log(self.sigma) - self.logmass
        return np.where((x >= self.lo) & (x < self.hi), out, -np.inf)

    def cdf(self, x):
        x = _as_array(x)
        z = np.clip((x - self.mu) / self.sigma, self.alpha, self.beta)
        a, b = self.alpha, self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            if a >= 0.0:
                la = special.log_ndtr(-a)
                out = -np.expm1(special.log_ndtr(-z) - la) * np.exp(la - self.logmass)
            elif b <= 0.0:
                lz = special.log_ndtr(z)
                out = -np.expm1(special.log_ndtr(a) - lz) * np.exp(lz - self.logmass)
            else:
                out = (special.ndtr(z) - special.ndtr(a)) / math.exp(self.logmass)
        out = np.clip(out, 0.0, 1.0)
        out = np.where(x < self.lo, 0.0, out)
        return np.where(x >= self.hi, 1.0, out)

    def ppf(self, y):
        y = _as_array(y)
        a, b = self.alpha, self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            if a >= 0.0:
                la, lb = special.log_ndtr(-a), special.log_ndtr(-b)
                r = math.exp(lb - la)
                z = -special.ndtri_exp(la + np.log1p(-y * (1.0 - r)))
            elif b <= 0.0:
                la, lb = special.log_ndtr(a), special.log_ndtr(b)
                r = math.exp(la - lb)
                z = special.ndtri_exp(lb + np.log(r + y * (1.0 - r)))
            else:
                mass = math.exp(self.logmass)
                p = special.ndtr(a) + y * mass
                q = special.ndtr(-b) + (1.0 - y) * mass
                z = np.where(p < 0.5, special.ndtri(p), -special.ndtri(q))
        return np.clip(self.mu + self.sigma * z, self.lo, self.hi)

    def mean(self):
        def lphi(z):
            return -np.inf if math.isinf(z) else -0.5 * z * z - _LOG_SQRT_2PI

        pa = math.exp(lphi(self.alpha) - self.logmass)
        pb = math.exp(lphi(self.beta) - self.logmass)
        return self.mu + self.sigma * (pa - pb)


def _check_bounds(lower, upper):
    if not (np.isfinite(lower) and lower < upper):
        raise ValueError(f"invalid bounds [{lower}, {upper})")


def _bracketed_inverse(cdf, pdf, y, lo, hi, tol=1e-13, max_iter=200):
    """Solve cdf(x) = y elementwise for a monotone cdf, lo <= x <= hi.

    Bisection keeps the bracket, a Newton step is taken whenever it lands
    strictly inside the bracket.
    """
    y = _as_array(y)
    lo = np.array(np.broadcast_to(lo, y.shape), dtype=float)
    hi = np.array(np.broadcast_to(hi, y.shape), dtype=float)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = cdf(x) - y
        done = np.abs(f) <= tol
        if done.all():
            break
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - f / pdf(x)
        ok = (step > lo) & (step < hi) & np.isfinite(step)
        nxt = np.where(ok, step, 0.5 * (lo + hi))
        stalled = hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(x))
        x = np.where(done | stalled, x, nxt)
    return x


# ---------------------------------------------------------------------------
# public distributions


class _Base:
    lower: float
    upper: float

    def pdf(self, x):
        return _ret(np.exp(self.logpdf(x)), x)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.ppf(rng.random(n))

    def to_dict(self) -> dict:
        return to_dict(self)


@dataclass(frozen=True)
class BoundedExponential(_Base):
    """Exponential distribution with rate ``rate`` conditioned on ``[lower, upper)``."""

    rate: float
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        _check_bounds(self.lower, self.upper)

    def logpdf(self, x):
        return _ret(_texp_logpdf(self.rate, self.lower, self.upper, x), x)

    def cdf(self, x):
        return _ret(_texp_cdf(self.rate, self.lower, self.upper, x), x)

    def ppf(self, y):
        return _ret(_texp_ppf(self.rate, self.lower, self.upper, y), y)

    def mean(self) -> float:
        return _texp_mean(self.rate, self.lower, self.upper)


def exponential(rate: float) -> BoundedExponential:
    """Plain exponential distribution on [0, inf)."""
    return BoundedExponential(rate, 0.0, math.inf)


@dataclass(frozen=True)
class BoundedNormal(_Base):
    """Zero-mean normal with scale ``scale`` conditioned on ``[lower, upper)``."""

    scale: float
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        _check_bounds(self.lower, self.upper)
        object.__setattr__(self, "_tn", _TruncNormal(0.0, self.scale, self.lower, self.upper))

    def logpdf(self, x):
        return _ret(self._tn.logpdf(x), x)

    def cdf(self, x):
        return _ret(self._tn.cdf(x), x)

    def ppf(self, y):
        return _ret(self._tn.ppf(y), y)

    def mean(self) -> float:
        return self._tn.mean()


class _NormalMixture(_Base):
    """Mixture of truncated normals sharing one interval (internal)."""

    def __init__(self, weights, comps: Sequence[_TruncNormal], lower, upper):
        self.weights = np.asarray(weights, dtype=float)
        self.comps = tuple(comps)
        self.lower = lower
        self.upper = upper

    def logpdf(self, x):
        x = _as_array(x)
        with np.errstate(divide="ignore"):
            terms = [np.log(p) + c.logpdf(x) for p, c in zip(self.weights, self.comps) if p > 0]
        return np.logaddexp.reduce(np.stack(terms), axis=0) if len(terms) > 1 else terms[0]

    def cdf(self, x):
        x = _as_array(x)
        return np.clip(sum(p * c.cdf(x) for p, c in zip(self.weights, self.comps)), 0.0, 1.0)

    def ppf(self, y):
        y = _as_array(y)
        live = [c for p, c in zip(self.weights, self.comps) if p > 0]
        if len(live) == 1:
            return live[0].ppf(y)
        # The mixture quantile lies between the smallest and largest component quantile.
        qs = np.stack([c.ppf(y) for c in live])
        x = _bracketed_inverse(
            self.cdf, lambda t: np.exp(self.logpdf(t)), y, qs.min(axis=0), qs.max(axis=0)
        )
        return np.where(y <= 0.0, self.lower, x)

    def mean(self):
        return float(sum(p * c.mean() for p, c in zip(self.weights, self.comps)))


@dataclass(frozen=True)
class MixtureBoundedNormal(_Base):
    """Mixture of zero-mean bounded normals that share the interval ``[lower, upper)``."""

    weights: tuple
    scales: tuple
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(p) for p in self.weights))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if len(self.weights) != len(self.scales) or not self.weights:
            raise ValueError("weights and scales must be non-empty and of equal length")
        w = np.asarray(self.weights)
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must lie on the simplex, got {self.weights}")
        if min(self.scales) <= 0:
            raise ValueError("scales must be positive")
        _check_bounds(self.lower, self.upper)
        comps = [_TruncNormal(0.0, s, self.lower, self.upper) for s in self.scales]
        object.__setattr__(self, "_mix", _NormalMixture(w, comps, self.lower, self.upper))

    @property
    def m(self) -> int:
        return len(self.weights)

    def logpdf(self, x):
        return _ret(self._mix.logpdf(x), x)

    def cdf(self, x):
        return _ret(self._mix.cdf(x), x)

    def ppf(self, y):
        return _ret(self._mix.ppf(y), y)

    def mean(self) -> float:
        return self._mix.mean()


@dataclass(frozen=True)
class PiecewiseMixture(_Base):
    """Distribution glued from bounded pieces on consecutive intervals.

    Args:
        cuts: interior truncation points gamma_1 < ... < gamma_{k-1}.
        weights: piece probabilities pi_1..pi_k (simplex).
        pieces: k bounded distributions; piece i must live on
            ``[gamma_{i-1}, gamma_i)`` where gamma_0 is the first piece's
            lower bound and gamma_k the last piece's upper bound.
    """

    cuts: tuple
    weights: tuple
    pieces: tuple

    def __post_init__(self):
        object.__setattr__(self, "cuts", tuple(float(c) for c in self.cuts))
        object.__setattr__(self, "weights", tuple(float(p) for p in self.weights))
        object.__setattr__(self, "pieces", tuple(self.pieces))
        k = len(self.pieces)
        if k == 0 or len(self.weights) != k or len(self.cuts) != k - 1:
            raise ValueError(
                f"need k pieces, k weights and k-1 cuts; got {k}, "
                f"{len(self.weights)}, {len(self.cuts)}"
            )
        w = np.asarray(self.weights)
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"piece weights must lie on the simplex, got {self.weights}")
        bounds = self.bounds
        if any(b >= c for b, c in zip(bounds[:-1], bounds[1:])):
            raise ValueError(f"truncation points must increase strictly: {bounds}")
        for i, piece in enumerate(self.pieces):
            if piece.lower != bounds[i] or piece.upper != bounds[i + 1]:
                raise ValueError(
                    f"piece {i} lives on [{piece.lower}, {piece.upper}) but its slot "
                    f"is [{bounds[i]}, {bounds[i + 1]})"
                )
        cum = np.concatenate([[0.0], np.cumsum(w)])
        object.__setattr__(self, "_cum", cum / cum[-1])

    @property
    def k(self) -> int:
        return len(self.pieces)

    @property
    def bounds(self) -> tuple:
        return (self.pieces[0].lower, *self.cuts, self.pieces[-1].upper)

    @property
    def lower(self) -> float:
        return self.pieces[0].lower

    @property
    def upper(self) -> float:
        return self.pieces[-1].upper

    def piece_index(self, x) -> np.ndarray:
        """Index i of the piece whose interval holds x (clipped to 0..k-1)."""
        return np.searchsorted(np.asarray(self.cuts), _as_array(x), side="right")

    def logpdf(self, x):
        xa = _as_array(x)
        idx = self.piece_index(xa)
        out = np.full(xa.shape, -np.inf)
        with np.errstate(divide="ignore"):
            for i, (p, piece) in enumerate(zip(self.weights, self.pieces)):
                m = idx == i
                if m.any() and p > 0:
                    out[m] = math.log(p) + piece.logpdf(xa[m])
        return _ret(out, x)

    def cdf(self, x):
        xa = _as_array(x)
        idx = self.piece_index(xa)
        out = np.zeros(xa.shape)
        for i, (p, piece) in enumerate(zip(self.weights, self.pieces)):
            m = idx == i
            if m.any():
                out[m] = self._cum[i] + p * piece.cdf(xa[m])
        out = np.where(xa < self.lower, 0.0, out)
        return _ret(np.clip(out, 0.0, 1.0), x)

    def ppf(self, y):
        ya = _as_array(y)
        last = max(i for i, p in enumerate(self.weights) if p > 0)
        idx = np.clip(np.searchsorted(self._cum[1:], ya, side="right"), 0, last)
        out = np.empty(ya.shape)
        for i, (p, piece) in enumerate(zip(self.weights, self.pieces)):
            m = idx == i
            if m.any():
                local = np.clip((ya[m] - self._cum[i]) / p, 0.0, _ONE_MINUS)
                out[m] = piece.ppf(local)
        return _ret(out, y)

    def mean(self) -> float:
        return float(sum(p * piece.mean() for p, piece in zip(self.weights, self.pieces) if p > 0))


@dataclass(frozen=True)
class Pareto(_Base):
    """Pareto distribution with minimum ``scale`` and tail index ``shape``."""

    scale: float
    shape: float

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0):
            raise ValueError(f"Pareto needs scale > 0 and shape > 0, got {self.scale}, {self.shape}")

    @property
    def lower(self) -> float:
        return self.scale

    @property
    def upper(self) -> float:
        return math.inf

    def logpdf(self, x):
        xa = _as_array(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = math.log(self.shape) + self.shape * math.log(self.scale) - (self.shape + 1) * np.log(xa)
        return _ret(np.where(xa >= self.scale, out, -np.inf), x)

    def cdf(self, x):
        xa = _as_array(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.expm1(self.shape * np.log(self.scale / np.maximum(xa, self.scale)))
        return _ret(out, x)

    def ppf(self, y):
        ya = _as_array(y)
        return _ret(self.scale * np.exp(-np.log1p(-ya) / self.shape), y)

    def mean(self) -> float:
        return math.inf if self.shape <= 1 else self.shape * self.scale / (self.shape - 1)


# ---------------------------------------------------------------------------
# exponential change of measure


def _tilt_leaf(base, theta: float):
    """Realize exp(theta x) * f(x) / M(theta) for a non-piecewise bounded base."""
    lo, hi = base.lower, base.upper
    if isinstance(base, BoundedExponential):
        r = base.rate - theta
        if math.isinf(hi) and r <= 0:
            raise ValueError(
                f"inadmissible tilt theta={theta} for unbounded exponential piece "
                f"with rate {base.rate}: theta must stay below the rate"
            )
        return _TExp(r, lo, hi)
    if isinstance(base, BoundedNormal):
        return _TruncNormal(theta * base.scale**2, base.scale, lo, hi)
    if isinstance(base, MixtureBoundedNormal):
        # component j is reweighted by its own moment generating function
        comps, logw = [], []
        for p, s, c0 in zip(base.weights, base.scales, base._mix.comps):
            c = _TruncNormal(theta * s * s, s, lo, hi)
            lp = math.log(p) if p > 0 else -math.inf
            logw.append(lp + 0.5 * (theta * s) ** 2 + c.logmass - c0.logmass)
            comps.append(c)
        logw = np.asarray(logw)
        w = np.exp(logw - logw.max())
        return _NormalMixture(w / w.sum(), comps, lo, hi)
    raise TypeError(f"cannot tilt a {type(base).__name__}")


@dataclass(frozen=True)
class _TExp:
    r: float
    lo: float
    hi: float

    def logpdf(self, x):
        return _texp_logpdf(self.r, self.lo, self.hi, x)

    def cdf(self, x):
        return _texp_cdf(self.r, self.lo, self.hi, x)

    def ppf(self, y):
        return _texp_ppf(self.r, self.lo, self.hi, y)

    def mean(self):
        return _texp_mean(self.r, self.lo, self.hi)


@dataclass(frozen=True)
class TiltedDistribution(_Base):
    """Exponentially tilted version of a base distribution.

    For a piecewise base ``theta`` holds one tilt per piece and each
    conditional piece is tilted on its own interval; ``weights`` replaces the
    piece weights (defaults to the base weights).  For every other base a
    single scalar ``theta`` tilts the whole density.
    """

    base: Any
    theta: Any
    weights: tuple | None = None

    def __post_init__(self):
        base = self.base
        if isinstance(base, TiltedDistribution):
            # tilts compose additively
            th = np.asarray(base.theta, dtype=float) + np.asarray(self.theta, dtype=float)
            w = self.weights if self.weights is not None else base.weights
            object.__setattr__(self, "base", base.base)
            object.__setattr__(self, "theta", th)
            object.__setattr__(self, "weights", w)
            base = self.base
        if isinstance(base, Pareto):
            raise TypeError("Pareto baseline is fit-only and cannot be tilted")
        if isinstance(base, PiecewiseMixture):
            theta = tuple(float(t) for t in np.broadcast_to(np.asarray(self.theta, float), (base.k,)))
            weights = base.weights if self.weights is None else tuple(float(p) for p in self.weights)
            pieces = tuple(TiltedDistribution(piece, t) for piece, t in zip(base.pieces, theta))
            impl = PiecewiseMixture(base.cuts, weights, pieces)
            object.__setattr__(self, "weights", weights)
        else:
            if np.ndim(self.theta) != 0:
                raise ValueError("a non-piecewise base takes a scalar tilt")
            if self.weights is not None:
                raise ValueError("piece weights apply to piecewise bases only")
            theta = float(self.theta)
            impl = _tilt_leaf(base, theta)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "_impl", impl)

    @property
    def lower(self) -> float:
        return self.base.lower

    @property
    def upper(self) -> float:
        return self.base.upper

    @property
    def realized(self):
        """The tilted density in closed form (piecewise mixture or kernel)."""
        return self._impl

    def logpdf(self, x):
        return _ret(self._impl.logpdf(x), x)

    def cdf(self, x):
        return _ret(self._impl.cdf(x), x)

    def ppf(self, y):
        return _ret(self._impl.ppf(y), y)

    def mean(self) -> float:
        return float(self._impl.mean())


# ---------------------------------------------------------------------------
# functional surface


def pdf(d, x):
    return d.pdf(x)


def cdf(d, x):
    return d.cdf(x)


def inverse_cdf(d, y):
    """Inverse CDF of ``d``; ``y`` must lie in [0, 1)."""
    ya = _as_array(y)
    if np.any(~((ya >= 0.0) & (ya < 1.0))):
        raise ValueError("inverse_cdf needs probabilities in [0, 1)")
    return d.ppf(y)


def sample(d, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` values by the inverse-CDF method."""
    return d.sample(rng, n)


def tilt(d, theta, weights=None) -> TiltedDistribution:
    return TiltedDistribution(d, theta, None if weights is None else tuple(weights))


def log_likelihood_ratio(original, accelerated, x):
    """log(dF/dF*) at x.  Points outside the original support get -inf."""
    xa = _as_array(x)
    lo = _as_array(original.logpdf(xa))
    if original is accelerated:
        return _ret(np.where(np.isfinite(lo), 0.0, -np.inf), x)
    la = _as_array(accelerated.logpdf(xa))
    bad = np.isfinite(lo) & ~np.isfinite(la)
    if bad.any():
        raise SupportError(
            f"accelerated density is zero at x={xa[bad].ravel()[0]!r} where the "
            "original density is positive"
        )
    with np.errstate(invalid="ignore"):
        out = np.where(np.isfinite(lo), lo - la, -np.inf)
    return _ret(out, x)


def check_support(original, accelerated) -> None:
    """Raise :class:`SupportError` unless ``accelerated`` covers ``original``.

    Sampling from the accelerated law never visits its holes, so coverage
    is checked up front: the support interval must contain the original's,
    and no zero-weight piece may sit where the original has mass.
    """
    if accelerated is original:
        return
    if accelerated.lower > original.lower or accelerated.upper < original.upper:
        raise SupportError(
            f"accelerated support [{accelerated.lower}, {accelerated.upper}) does not cover "
            f"[{original.lower}, {original.upper})"
        )
    pm = accelerated.realized if isinstance(accelerated, TiltedDistribution) else accelerated
    if isinstance(pm, PiecewiseMixture):
        for w, a, b in zip(pm.weights, pm.bounds[:-1], pm.bounds[1:]):
            if w == 0.0 and float(original.cdf(b)) - float(original.cdf(a)) > 0.0:
                raise SupportError(f"accelerated piece [{a}, {b}) has zero weight where the original has mass")


def likelihood_ratio(original, accelerated, x):
    """Importance weight f(x) / f*(x)."""
    return _ret(np.exp(_as_array(log_likelihood_ratio(original, accelerated, x))), x)


# ---------------------------------------------------------------------------
# JSON documents; an unbounded upper limit is written as null.


def _bound(v):
    return None if math.isinf(v) else float(v)


def _unbound(v):
    return math.inf if v is None else float(v)


def to_dict(d) -> dict:
    if isinstance(d, BoundedExponential):
        return {"kind": "bounded_exponential", "rate": float(d.rate),
                "lower": float(d.lower), "upper": _bound(d.upper)}
    if isinstance(d, BoundedNormal):
        return {"kind": "bounded_normal", "scale": float(d.scale),
                "lower": float(d.lower), "upper": _bound(d.upper)}
    if isinstance(d, MixtureBoundedNormal):
        return {"kind": "mixture_bounded_normal", "weights": list(d.weights),
                "scales": list(d.scales), "lower": float(d.lower), "upper": _bound(d.upper)}
    if isinstance(d, PiecewiseMixture):
        return {"kind": "piecewise", "cuts": list(d.cuts), "weights": list(d.weights),
                "pieces": [to_dict(p) for p in d.pieces]}
    if isinstance(d, Pareto):
        return {"kind": "pareto", "scale": float(d.scale), "shape": float(d.shape)}
    if isinstance(d, TiltedDistribution):
        theta = list(d.theta) if isinstance(d.theta, tuple) else d.theta
        doc = {"kind": "tilted", "base": to_dict(d.base), "theta": theta}
        if isinstance(d.base, PiecewiseMixture):
            doc["weights"] = list(d.weights)
        return doc
    raise TypeError(f"cannot serialize {type(d).__name__}")


def from_dict(doc: dict):
    kind = doc["kind"]
    if kind == "bounded_exponential":
        return BoundedExponential(doc["rate"], doc["lower"], _unbound(doc["upper"]))
    if kind == "bounded_normal":
        return BoundedNormal(doc["scale"], doc["lower"], _unbound(doc["upper"]))
    if kind == "mixture_bounded_normal":
        return MixtureBoundedNormal(tuple(doc["weights"]), tuple(doc["scales"]),
                                    doc["lower"], _unbound(doc["upper"]))
    if kind == "piecewise":
        return PiecewiseMixture(tuple(doc["cuts"]), tuple(doc["weights"]),
                                tuple(from_dict(p) for p in doc["pieces"]))
    if kind == "pareto":
        return Pareto(doc["scale"], doc["shape"])
    if kind == "tilted":
        theta = doc["theta"]
        theta = tuple(theta) if isinstance(theta, list) else theta
        w = doc.get("weights")
        return TiltedDistribution(from_dict(doc["base"]), theta, None if w is None else tuple(w))
    raise ValueError(f"unknown distribution kind {kind!r}")


def dumps(d, **kw) -> str:
    return json.dumps(to_dict(d), **kw)


def loads(s: str):
    return from_dict(json.loads(s))
