"""Analytically tractable Gaussian toy model.

Data are n iid Normal(theta, sigma^2) draws; the summary is the sample mean
(optionally also the sample SD). Because the mean is sufficient, the exact
posterior under a uniform box prior is a truncated normal, which gives a
closed-form oracle for every sampler in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..core import (
    BoxPrior,
    ErrorVector,
    GenerativeModel,
    ParameterVector,
    Scalar,
    SummaryVector,
)

__all__ = ["ToyGaussSpec", "ToyGaussModel", "toy_posterior_oracle"]


@dataclass(frozen=True)
class ToyGaussSpec:
    """Configuration of the toy model.

    n_obs draws per dataset with noise sd sigma; observed_mean (and, for the
    two-summary variant, observed_sd) play the role of the observed data.
    """

    n_obs: int
    sigma: float
    observed_mean: float
    observed_sd: float | None = None

    def __post_init__(self):
        if self.n_obs < 2:
            raise ValueError("n_obs must be at least 2")
        if not (self.sigma > 0) or not math.isfinite(self.sigma):
            raise ValueError("sigma must be positive and finite")
        if not math.isfinite(self.observed_mean):
            raise ValueError("observed_mean must be finite")
        if self.observed_sd is not None and not (self.observed_sd > 0):
            raise ValueError("observed_sd must be positive when given")

    @property
    def n_summaries(self) -> int:
        return 1 if self.observed_sd is None else 2


class ToyGaussModel(GenerativeModel):
    """Gaussian toy simulator with signed-difference errors."""

    parameter_names = ("theta",)

    def __init__(self, spec: ToyGaussSpec):
        self.spec = spec
        self.summary_names = ("mean",) if spec.n_summaries == 1 else ("mean", "sd")

    def simulate(self, theta: ParameterVector, rng: np.random.Generator) -> SummaryVector:
        x = rng.normal(theta.values[0], self.spec.sigma, size=self.spec.n_obs)
        entries = [Scalar(float(np.mean(x)))]
        if self.spec.n_summaries == 2:
            entries.append(Scalar(float(np.std(x, ddof=1))))
        return SummaryVector(tuple(entries))

    def distances(self, simulated: SummaryVector) -> ErrorVector:
        eps = [simulated.entries[0].value - self.spec.observed_mean]
        if self.spec.n_summaries == 2:
            eps.append(simulated.entries[1].value - self.spec.observed_sd)
        return ErrorVector(np.array(eps))

    def default_prior(self) -> BoxPrior:
        half = max(5.0, 10.0 * self.spec.sigma)
        c = self.spec.observed_mean
        return BoxPrior(("theta",), np.array([c - half]), np.array([c + half]))


def toy_posterior_oracle(
    lower: float, upper: float, spec: ToyGaussSpec, observed_mean: float | None = None
) -> tuple[float, float]:
    """Exact posterior mean and variance of theta given the observed sample mean.

    Valid for the sufficient single-summary (sample mean) configuration: the
    posterior under a uniform prior on [lower, upper] is the normal with
    location observed_mean and scale sigma/sqrt(n) truncated to the prior
    box. Bounds may be infinite.
    """
    if observed_mean is None:
        observed_mean = spec.observed_mean
    if not lower < upper:
        raise ValueError("need lower < upper")
    scale = spec.sigma / math.sqrt(spec.n_obs)
    a = (lower - observed_mean) / scale
    b = (upper - observed_mean) / scale
    if a > 8.0 or b < -8.0:
        raise FloatingPointError(
            "prior box excludes essentially all posterior mass (beyond 8 scales)"
        )
    dist = stats.truncnorm(a, b, loc=observed_mean, scale=scale)
    return float(dist.mean()), float(dist.var())
