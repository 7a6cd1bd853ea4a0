"""Representative instances of every distribution kind, shared by tests."""

import math

from pmaccel import distributions as dist

INF = math.inf


def _piecewise3():
    return dist.PiecewiseMixture(
        (1.0, 3.0), (0.7, 0.2, 0.1),
        (dist.BoundedExponential(1.2, 0.0, 1.0),
         dist.BoundedNormal(1.5, 1.0, 3.0),
         dist.BoundedExponential(0.8, 3.0, INF)),
    )


def _ttc_like():
    return dist.PiecewiseMixture(
        (0.15,), (0.94, 0.06),
        (dist.MixtureBoundedNormal((0.7, 0.3), (0.03, 0.09), 0.0, 0.15),
         dist.BoundedExponential(18.0, 0.15, INF)),
    )


CATALOG = {
    "exp": dist.exponential(2.0),
    "bexp": dist.BoundedExponential(3.0, 1.0, 2.0),
    "halfnormal": dist.BoundedNormal(1.0),
    "bnormal": dist.BoundedNormal(1.5, 0.5, 3.0),
    "bnormal_tail": dist.BoundedNormal(0.5, 2.0, INF),
    "mixture": dist.MixtureBoundedNormal((0.6, 0.4), (0.5, 2.0), 0.0, INF),
    "mixture_bounded": dist.MixtureBoundedNormal((0.3, 0.5, 0.2), (0.2, 0.7, 1.5), 0.1, 2.5),
    "piecewise": _piecewise3(),
    "piecewise_ttc": _ttc_like(),
    "pareto": dist.Pareto(1.0, 2.5),
    "tilt_exp": dist.tilt(dist.exponential(1.0), 0.75),
    "tilt_bexp": dist.tilt(dist.BoundedExponential(1.0, 1.0, 2.0), 0.3),
    "tilt_bnormal": dist.tilt(dist.BoundedNormal(1.5, 0.5, 3.0), -0.8),
    "tilt_mixture": dist.tilt(dist.MixtureBoundedNormal((0.6, 0.4), (0.5, 2.0), 0.0, INF), 1.1),
    "tilt_piecewise": dist.tilt(_piecewise3(), (-0.5, 0.9, 0.5), (0.2, 0.5, 0.3)),
    "tilt_piecewise_ttc": dist.tilt(_ttc_like(), (20.0, 14.0), (0.3, 0.7)),
}


def breakpoints(d):
    """Support bounds plus interior cuts, for piecewise quadrature."""
    base = d.base if isinstance(d, dist.TiltedDistribution) else d
    if isinstance(base, dist.PiecewiseMixture):
        return list(base.bounds)
    return [d.lower, d.upper]
