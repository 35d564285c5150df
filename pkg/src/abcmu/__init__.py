"""Likelihood-free Bayesian inference on the joint parameter/error space.

Samplers accept parameter draws whose simulated summaries fall within
per-summary tolerance windows and retain the per-summary error vectors, so
the same run that fits a model also exposes where it disagrees with the
data. Ships rejection, annealed Metropolis-Hastings, sequential importance
sampling with rejection control, and an MCMC-seeded hybrid, together with
error-density diagnostics and example simulators (a conjugate Gaussian toy,
random-graph growth models, a seasonal stochastic SIRS epidemic).
"""

__version__ = "0.1.0"

from .core import (
    BoxPrior,
    CannotInitializeError,
    DistanceDomainError,
    EmpiricalDistribution,
    ErrorVector,
    GaussianRandomWalkProposal,
    GenerativeModel,
    IndicatorKernel,
    KeyedValues,
    ParameterVector,
    Scalar,
    SummaryVector,
    ToleranceSchedule,
    distance_cvm,
    distance_linf_combine,
    distance_signed,
    kernel_eval,
    kernel_product,
)
from .diagnostics import (
    AshGrid2D,
    EssReport,
    PerformanceReport,
    error_density_ash2d,
    ess_sokal,
    ess_weights,
    expected_error,
    factorization_check,
    performance_report,
)
from .rng import substream
from .samplers import (
    AnnealingPolicy,
    HybridResult,
    MhChainState,
    MhTrace,
    MultiChainResult,
    Particle,
    ParticleSystem,
    RejectionResult,
    SisResult,
    anneal_next,
    build_geometric_schedule,
    hybrid_abcmu,
    mh_abcmu,
    mh_multichain,
    pilot_tolerance,
    rej_abc,
    rej_abcmu,
    sis_abcmu,
)

__all__ = [name for name in dir() if not name.startswith("_")]
