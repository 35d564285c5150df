"""Foundational types and pure functions shared by all samplers and models.

Kernels, per-summary distances, box priors, Gaussian random-walk proposals,
tolerance schedules, and the simulator interface. All values are immutable
after construction and safe to share across workers.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "DistanceDomainError",
    "CannotInitializeError",
    "ParameterVector",
    "Scalar",
    "EmpiricalDistribution",
    "KeyedValues",
    "SummaryVector",
    "ErrorVector",
    "IndicatorKernel",
    "ToleranceSchedule",
    "BoxPrior",
    "GaussianRandomWalkProposal",
    "GenerativeModel",
    "kernel_eval",
    "kernel_product",
    "distance_signed",
    "distance_cvm",
    "distance_linf_combine",
]


class DistanceDomainError(ValueError):
    """A per-summary distance is undefined for this simulation.

    Samplers treat it as a rejected simulation (counted against the attempt
    budget), not as a fatal error.
    """


class CannotInitializeError(RuntimeError):
    """Chain initialization exhausted its attempt budget."""


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ParameterVector:
    """A point in parameter space with named components."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _as_float_array(self.values, "values"))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != self.values.size:
            raise ValueError("values and names must have equal length")

    def __len__(self) -> int:
        return self.values.size

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


@dataclass(frozen=True)
class Scalar:
    """A real-valued summary."""

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("scalar summary must be finite")


@dataclass(frozen=True)
class EmpiricalDistribution:
    """A summary given as a sorted sample of reals."""

    samples: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.samples, "samples")
        if np.any(np.diff(arr) < 0):
            arr = np.sort(arr)
            arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class KeyedValues:
    """A summary given as values indexed by discrete keys.

    Used for statistics whose comparison must align entries by key (for
    example degree-pair enrichment values); distances over this kind match
    keys present on both sides. May be empty, in which case any distance
    over it is undefined and the simulation gets rejected.
    """

    keys: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        vals.setflags(write=False)
        if len(self.keys) != vals.size:
            raise ValueError("keys and values must have equal length")
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict:
        return dict(zip(self.keys, self.values.tolist()))


Summary = Scalar | EmpiricalDistribution | KeyedValues


@dataclass(frozen=True)
class SummaryVector:
    """Ordered collection of K summaries of one (pseudo-)dataset."""

    entries: tuple[Summary, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) == 0:
            raise ValueError("need at least one summary")
        for e in self.entries:
            if not isinstance(e, (Scalar, EmpiricalDistribution, KeyedValues)):
                raise TypeError(f"not a summary: {e!r}")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ErrorVector:
    """K per-summary signed errors, the central object of the method."""

    errors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "errors", _as_float_array(self.errors, "errors"))

    def __len__(self) -> int:
        return self.errors.size


# ---------------------------------------------------------------------------
# kernels and tolerances


def kernel_eval(e: float, tau: float) -> float:
    """One-dimensional acceptance kernel: 1/tau if |e| <= tau/2 else 0."""
    if not (tau > 0) or not math.isfinite(tau):
        raise ValueError(f"tolerance must be positive and finite, got {tau}")
    if not math.isfinite(e):
        raise ValueError(f"error must be finite, got {e}")
    return 1.0 / tau if abs(e) <= tau / 2.0 else 0.0


def kernel_product(errors: ErrorVector | np.ndarray, tau_row: Sequence[float]) -> float:
    """Product of per-summary kernels; zero iff any component is outside its window."""
    eps = errors.errors if isinstance(errors, ErrorVector) else np.asarray(errors, dtype=float)
    taus = np.asarray(tau_row, dtype=float)
    if eps.shape != taus.shape:
        raise ValueError(f"length mismatch: {eps.shape} errors vs {taus.shape} tolerances")
    if np.any(taus <= 0) or not np.all(np.isfinite(taus)):
        raise ValueError("tolerances must be positive and finite")
    if not np.all(np.isfinite(eps)):
        raise ValueError("errors must be finite")
    if np.all(np.abs(eps) <= taus / 2.0):
        return float(np.prod(1.0 / taus))
    return 0.0


def inside_windows(eps: np.ndarray, tau_row: np.ndarray) -> bool:
    """Window test |eps_k| <= tau_k/2 for all k (the 0/1 indicator-kernel accept)."""
    return bool(np.all(np.abs(eps) <= np.asarray(tau_row) / 2.0))


@dataclass(frozen=True)
class IndicatorKernel:
    """The boxcar acceptance kernel with tolerance tau."""

    tolerance: float

    def __post_init__(self):
        if not (self.tolerance > 0) or not math.isfinite(self.tolerance):
            raise ValueError("tolerance must be positive and finite")

    def __call__(self, e: float) -> float:
        return kernel_eval(e, self.tolerance)


@dataclass(frozen=True)
class ToleranceSchedule:
    """Per-summary, per-stage tolerances tau[n, k], non-increasing in n."""

    taus: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.taus, dtype=float))
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("taus must be a (stages, summaries) matrix")
        if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
            raise ValueError("all tolerances must be positive and finite")
        if np.any(np.diff(arr, axis=0) > 0):
            raise ValueError("tolerances must be non-increasing stage by stage")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "taus", arr)

    @property
    def n_stages(self) -> int:
        return self.taus.shape[0]

    @property
    def n_summaries(self) -> int:
        return self.taus.shape[1]

    def row(self, stage: int) -> np.ndarray:
        """Tolerance row for 1-based stage index."""
        if not 1 <= stage <= self.n_stages:
            raise ValueError(f"stage {stage} outside 1..{self.n_stages}")
        return self.taus[stage - 1]

    @property
    def final_row(self) -> np.ndarray:
        return self.taus[-1]


# ---------------------------------------------------------------------------
# distances


def distance_signed(s: Scalar | float, s0: Scalar | float, mode: str = "difference") -> float:
    """Signed scalar discrepancy: plain difference or log ratio."""
    a = s.value if isinstance(s, Scalar) else float(s)
    b = s0.value if isinstance(s0, Scalar) else float(s0)
    if mode == "difference":
        return a - b
    if mode == "log_ratio":
        if a <= 0 or b <= 0:
            raise DistanceDomainError(f"log_ratio needs positive inputs, got ({a}, {b})")
        return math.log(a / b)
    raise ValueError(f"unknown mode {mode!r}")


def distance_cvm(a: EmpiricalDistribution | np.ndarray, b: EmpiricalDistribution | np.ndarray) -> float:
    """Two-sample Cramer-von Mises statistic.

    T = n m / (n+m)^2 * sum over the pooled sample (with multiplicity) of
    (F_a - F_b)^2, with right-continuous empirical CDFs so ties are handled
    exactly. Symmetric, and zero exactly when the two empirical CDFs agree.
    """
    xa = a.samples if isinstance(a, EmpiricalDistribution) else np.sort(np.asarray(a, dtype=float))
    xb = b.samples if isinstance(b, EmpiricalDistribution) else np.sort(np.asarray(b, dtype=float))
    if xa.size == 0 or xb.size == 0:
        raise ValueError("empty sample")
    n, m = xa.size, xb.size
    pooled = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pooled, side="right") / n
    fb = np.searchsorted(xb, pooled, side="right") / m
    return float(n * m / (n + m) ** 2 * np.sum((fa - fb) ** 2))


def distance_linf_combine(errors: ErrorVector | np.ndarray) -> float:
    """Combine per-summary errors into the single max-magnitude error."""
    eps = errors.errors if isinstance(errors, ErrorVector) else np.asarray(errors, dtype=float)
    if eps.size == 0:
        raise ValueError("empty error vector")
    return float(np.max(np.abs(eps)))


def distance_keyed_mean_signed(a: KeyedValues, b: KeyedValues) -> float:
    """Mean signed difference over keys present in both summaries."""
    da, db = a.as_dict(), b.as_dict()
    shared = [k for k in da if k in db]
    if not shared:
        raise DistanceDomainError("no shared keys between the two keyed summaries")
    return float(np.mean([da[k] - db[k] for k in shared]))


# ---------------------------------------------------------------------------
# prior and proposal


@dataclass(frozen=True)
class BoxPrior:
    """Independent uniform prior over an axis-aligned box."""

    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        lo = _as_float_array(self.lower, "lower")
        hi = _as_float_array(self.upper, "upper")
        if not (len(self.names) == lo.size == hi.size):
            raise ValueError("names, lower, upper must have equal length")
        if np.any(lo >= hi):
            raise ValueError("lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def sample(self, rng: np.random.Generator) -> ParameterVector:
        vals = rng.uniform(self.lower, self.upper)
        return ParameterVector(vals, self.names)

    def density(self, theta: ParameterVector | np.ndarray) -> float:
        vals = theta.values if isinstance(theta, ParameterVector) else np.asarray(theta, dtype=float)
        if vals.size != self.dim:
            raise ValueError("dimension mismatch")
        if np.all((vals >= self.lower) & (vals <= self.upper)):
            return float(1.0 / np.prod(self.upper - self.lower))
        return 0.0

    def contains(self, values: np.ndarray) -> bool:
        return bool(np.all((values >= self.lower) & (values <= self.upper)))


@dataclass(frozen=True)
class GaussianRandomWalkProposal:
    """Componentwise Gaussian perturbation with stddev scale * stddevs[i].

    Symmetric: density(a -> b) == density(b -> a).
    """

    stddevs: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        sd = _as_float_array(self.stddevs, "stddevs")
        if np.any(sd <= 0):
            raise ValueError("stddevs must be positive")
        if not (self.scale > 0) or not math.isfinite(self.scale):
            raise ValueError("scale must be positive and finite")
        object.__setattr__(self, "stddevs", sd)

    @property
    def dim(self) -> int:
        return self.stddevs.size

    def scaled(self, multiplier: float) -> "GaussianRandomWalkProposal":
        return GaussianRandomWalkProposal(self.stddevs, self.scale * multiplier)

    def sample(self, theta: ParameterVector | np.ndarray, rng: np.random.Generator):
        if isinstance(theta, ParameterVector):
            vals = theta.values + rng.normal(0.0, self.scale * self.stddevs)
            return ParameterVector(vals, theta.names)
        return np.asarray(theta, dtype=float) + rng.normal(0.0, self.scale * self.stddevs)

    def density(self, theta, theta_prime) -> float:
        a = theta.values if isinstance(theta, ParameterVector) else np.asarray(theta, dtype=float)
        b = theta_prime.values if isinstance(theta_prime, ParameterVector) else np.asarray(theta_prime, dtype=float)
        if a.size != self.dim or b.size != self.dim:
            raise ValueError("dimension mismatch")
        sd = self.scale * self.stddevs
        z = (b - a) / sd
        return float(np.exp(-0.5 * np.sum(z * z)) / np.prod(sd * math.sqrt(2.0 * math.pi)))

    def density_from_many(self, thetas: np.ndarray, theta_new: np.ndarray) -> np.ndarray:
        """Vector of densities(thetas[j] -> theta_new), used in importance weights."""
        sd = self.scale * self.stddevs
        z = (np.asarray(theta_new, dtype=float) - np.asarray(thetas, dtype=float)) / sd
        norm = np.prod(sd * math.sqrt(2.0 * math.pi))
        return np.exp(-0.5 * np.sum(z * z, axis=1)) / norm


# ---------------------------------------------------------------------------
# simulator interface


class GenerativeModel(abc.ABC):
    """Simulator interface: draw pseudo-data at theta and summarize it.

    `simulate` must be a pure function of (theta, rng state): the same seed
    gives bit-identical output. Raw pseudo-data is summarized internally and
    never retained. `distances` compares a simulated summary vector against
    the observed one bound to the model instance and may raise
    DistanceDomainError, which samplers count as a rejected simulation.
    """

    parameter_names: tuple[str, ...]
    summary_names: tuple[str, ...]

    @property
    def n_params(self) -> int:
        return len(self.parameter_names)

    @property
    def n_summaries(self) -> int:
        return len(self.summary_names)

    @abc.abstractmethod
    def simulate(self, theta: ParameterVector, rng: np.random.Generator) -> SummaryVector:
        """Simulate pseudo-data at theta and return its summaries."""

    @abc.abstractmethod
    def distances(self, simulated: SummaryVector) -> ErrorVector:
        """Per-summary errors of a simulated summary vector against the observed data."""

    def draw_errors(self, theta: ParameterVector, rng: np.random.Generator) -> ErrorVector:
        return self.distances(self.simulate(theta, rng))

    def default_prior(self) -> BoxPrior:
        raise NotImplementedError(f"{type(self).__name__} has no default prior")
