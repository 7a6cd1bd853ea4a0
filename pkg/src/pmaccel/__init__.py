"""Piecewise mixture distributions and accelerated (importance-sampling)
evaluation of automated-vehicle cut-in safety."""

from .distributions import (
    BoundedExponential,
    BoundedNormal,
    MixtureBoundedNormal,
    Pareto,
    PiecewiseMixture,
    SupportError,
    TiltedDistribution,
    exponential,
    likelihood_ratio,
    log_likelihood_ratio,
    tilt,
)
from .fitting import FitConfig, FitReport, fit_mixture_em, fit_piecewise, fit_single_baselines
from .scenario import EgoConfig, LaneChangeEvent, ScenarioModel, simulate, simulate_batch, synthetic_model
from .problems import BernoulliProblem, ScenarioProblem, TailProblem
from .estimation import EstimationResult, StoppingRule, crude_mc, crude_sample_size, is_estimate, relative_half_width
from .cross_entropy import CEConfig, CEError, CEResult, cross_entropy_tune

__version__ = "0.1.0"
