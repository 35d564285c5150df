"""Model-criticism tools over sampler output.

Effective sample sizes (autocorrelation-based for chains, weight-based for
particles), two-dimensional average-shifted-histogram estimates of the error
density, the expected error vector, an independence (factorization) check
between error components, and the three-column performance report.

All functions are pure over immutable trace data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "DegenerateSeriesError",
    "DegenerateDataError",
    "EssReport",
    "AshGrid2D",
    "PerformanceReport",
    "ess_sokal",
    "ess_weights",
    "error_density_ash2d",
    "expected_error",
    "factorization_check",
    "performance_report",
    "mh_performance",
    "sis_performance",
]


class DegenerateSeriesError(ValueError):
    """The series carries no variation, so autocorrelation is undefined."""


class DegenerateDataError(ValueError):
    """The data collapses onto a point or line, so binning is undefined."""


@dataclass(frozen=True)
class EssReport:
    """Effective sample size and how it was computed."""

    method: str
    ess: float
    n_samples: int
    integrated_autocorrelation_time: float | None = None

    def __post_init__(self):
        if not (0.0 < self.ess <= self.n_samples + 1e-9):
            raise ValueError(f"ess must lie in (0, n_samples], got {self.ess}")


@dataclass(frozen=True)
class PerformanceReport:
    """The three headline efficiency columns of a sampler run."""

    burn_in: int
    ess_per_1000: float
    sims_per_ess: float
    ess: float
    total_sims: int
    n_post_burn_in: int

    def rows(self) -> dict[str, float]:
        return {
            "burn-in": self.burn_in,
            "ESS/1000": self.ess_per_1000,
            "#sim/ESS": self.sims_per_ess,
        }


# ---------------------------------------------------------------------------
# effective sample size


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    n = x.size
    nfft = 1 << (2 * n - 1).bit_length()
    xc = x - x.mean()
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conjugate(f), nfft)[:n]
    return acov / acov[0]


def ess_sokal(series: Sequence[float], c: float = 6.0) -> EssReport:
    """ESS of a scalar chain via the integrated autocorrelation time.

    tau_int(W) = 1 + 2 sum_{t=1..W} rho(t), with the self-consistent window:
    the smallest W satisfying W >= c * tau_int(W) (c = 6 by default). The
    returned ESS = n / tau_int is clamped to (0, n].
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 10:
        raise ValueError("need a 1-D series of at least 10 values")
    if np.ptp(x) == 0.0:
        raise DegenerateSeriesError("constant series has undefined autocorrelation")
    n = x.size
    rho = _autocorrelation(x)
    taus = 1.0 + 2.0 * np.cumsum(rho[1:])  # tau_int(W) for W = 1 .. n-1
    windows = np.arange(1, n)
    ok = windows >= c * taus
    w = int(np.argmax(ok)) if ok.any() else n - 2
    tau_int = float(max(taus[w], 1e-12))
    ess = min(float(n), n / tau_int)
    return EssReport("sokal_autocorrelation", ess, n, integrated_autocorrelation_time=tau_int)


def ess_weights(weights: Sequence[float]) -> EssReport:
    """ESS of a normalized weight vector: 1 / sum(W_i^2)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("need a nonempty 1-D weight vector")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must be normalized, sum is {w.sum()!r}")
    ess = float(1.0 / np.sum(w * w))
    return EssReport("inverse_sum_squared_weights", min(ess, float(w.size)), w.size)


# ---------------------------------------------------------------------------
# error-density estimation


@dataclass(frozen=True)
class AshGrid2D:
    """Average-shifted-histogram density over a 2-D error-pair grid.

    The density is piecewise constant on the fine grid (coarse bin width
    divided by the shift count) and integrates to one over the grid.
    """

    k1: int
    k2: int
    x_edges: np.ndarray
    y_edges: np.ndarray
    density: np.ndarray
    m_shifts: int

    def __post_init__(self):
        total = self.density.sum() * self.cell_area
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"density must integrate to 1 over the grid, got {total}")

    @property
    def cell_area(self) -> float:
        return float((self.x_edges[1] - self.x_edges[0]) * (self.y_edges[1] - self.y_edges[0]))

    def to_text(self) -> str:
        """Two header lines (bin edges per axis), then the density matrix."""
        fmt = lambda row: " ".join(format(v, ".17g") for v in row)
        lines = [fmt(self.x_edges), fmt(self.y_edges)]
        lines += [fmt(row) for row in self.density]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, k1: int = 0, k2: int = 1, m_shifts: int = 1) -> "AshGrid2D":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        x_edges = np.array([float(v) for v in lines[0].split()])
        y_edges = np.array([float(v) for v in lines[1].split()])
        density = np.array([[float(v) for v in ln.split()] for ln in lines[2:]])
        return cls(k1, k2, x_edges, y_edges, density, m_shifts)


def _ash_axis(values, n_bins):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi <= lo:
        raise DegenerateDataError("axis has zero range")
    h = (hi - lo) / n_bins
    return lo, hi, h


def error_density_ash2d(
    samples: np.ndarray,
    k1: int,
    k2: int,
    n_bins: int = 30,
    m_shifts: int = 4,
    weights: Sequence[float] | None = None,
) -> AshGrid2D:
    """Weighted average-shifted histogram of the error pair (k1, k2).

    Averages the m^2 histograms whose origins are shifted by multiples of
    h/m along each axis, over a grid spanning the data range padded by one
    bin width. Evaluated on the fine grid of width h/m, this is the
    separable triangular-weight count smoothing; m_shifts=1 reduces to a
    plain (padded) histogram. The result is normalized to integrate to 1.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2:
        raise ValueError("samples must be a 2-D array of error vectors")
    x, y = data[:, k1], data[:, k2]
    if np.unique(data[:, [k1, k2]], axis=0).shape[0] < 2:
        raise DegenerateDataError("need at least 2 distinct points")
    if n_bins < 4:
        raise ValueError("n_bins must be at least 4")
    if m_shifts < 1:
        raise ValueError("m_shifts must be at least 1")
    if weights is None:
        w = np.ones(x.size)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != x.shape or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative, one per sample")

    m = int(m_shifts)
    x_lo, x_hi, hx = _ash_axis(x, n_bins)
    y_lo, y_hi, hy = _ash_axis(y, n_bins)
    n_fine = m * (n_bins + 2)
    x_edges = np.linspace(x_lo - hx, x_hi + hx, n_fine + 1)
    y_edges = np.linspace(y_lo - hy, y_hi + hy, n_fine + 1)
    counts, _, _ = np.histogram2d(x, y, bins=[x_edges, y_edges], weights=w)

    kernel = (m - np.abs(np.arange(-(m - 1), m))) / m  # triangular, length 2m-1
    smoothed = np.apply_along_axis(lambda v: np.convolve(v, kernel, mode="same"), 0, counts)
    smoothed = np.apply_along_axis(lambda v: np.convolve(v, kernel, mode="same"), 1, smoothed)

    cell = (hx / m) * (hy / m)
    density = smoothed / (smoothed.sum() * cell)
    return AshGrid2D(k1, k2, x_edges, y_edges, density, m)


# ---------------------------------------------------------------------------
# expected error and factorization


def expected_error(samples: np.ndarray, weights: Sequence[float] | None = None) -> np.ndarray:
    """Componentwise weighted mean of the error vectors."""
    eps = np.asarray(samples, dtype=float)
    if eps.ndim != 2 or eps.shape[0] == 0:
        raise ValueError("samples must be a nonempty 2-D array of error vectors")
    if weights is None:
        return eps.mean(axis=0)
    w = np.asarray(weights, dtype=float)
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be normalized")
    return w @ eps


def factorization_check(
    samples: np.ndarray,
    k1: int,
    k2: int,
    n_bins: int = 10,
    edges: tuple[np.ndarray, np.ndarray] | None = None,
) -> float:
    """Total-variation distance between the binned joint of (eps_k1, eps_k2)
    and the product of its binned marginals.

    Zero means the two error components look independent on this grid;
    dependence between summary errors is where conflict can emerge. Explicit
    bin `edges` may be passed, e.g. to check invariance under a monotone
    relabeling of both axes.
    """
    eps = np.asarray(samples, dtype=float)
    if eps.ndim != 2 or eps.shape[0] < 1000:
        raise ValueError("need at least 1000 error vectors")
    x, y = eps[:, k1], eps[:, k2]
    if edges is None:
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            raise DegenerateDataError("degenerate marginal (zero range)")
        bins = [
            np.linspace(x.min(), x.max(), n_bins + 1),
            np.linspace(y.min(), y.max(), n_bins + 1),
        ]
    else:
        bins = [np.asarray(edges[0], dtype=float), np.asarray(edges[1], dtype=float)]
    counts, _, _ = np.histogram2d(x, y, bins=bins)
    total = counts.sum()
    if total == 0:
        raise DegenerateDataError("no samples fell inside the grid")
    p = counts / total
    p1 = p.sum(axis=1)
    p2 = p.sum(axis=0)
    return float(0.5 * np.abs(p - np.outer(p1, p2)).sum())


# ---------------------------------------------------------------------------
# performance report


def performance_report(
    burn_in: int, ess_report: EssReport, total_sims: int, n_post_burn_in: int
) -> PerformanceReport:
    """Assemble the three-column report from a run's counters.

    ESS/1000 rescales the ESS to a nominal 1000 post-burn-in samples;
    #sim/ESS divides the total simulation count (burn-in included) by the
    raw ESS.
    """
    if burn_in is None or total_sims is None:
        raise ValueError("missing counters")
    if n_post_burn_in <= 0:
        raise ValueError("no post-burn-in samples")
    ess = ess_report.ess
    return PerformanceReport(
        burn_in=int(burn_in),
        ess_per_1000=1000.0 * ess / n_post_burn_in,
        sims_per_ess=total_sims / ess,
        ess=ess,
        total_sims=int(total_sims),
        n_post_burn_in=int(n_post_burn_in),
    )


def mh_performance(multichain, c: float = 6.0) -> PerformanceReport:
    """Report for a multi-chain MCMC run.

    The scalar series fed to the autocorrelation ESS is each parameter
    component separately, per chain after burn-in; component ESS values sum
    over chains and the reported ESS is the minimum across components
    (conservative). Burn-in is the summed annealing completion iteration.
    """
    chains = [t for t in multichain.completed if t.post_burn_in()[0].shape[0] >= 10]
    if not chains:
        raise ValueError("no chain has at least 10 post-burn-in iterations")
    n_components = len(multichain.parameter_names)
    ess_by_component = np.zeros(n_components)
    n_post = 0
    for t in chains:
        thetas, _ = t.post_burn_in()
        n_post += thetas.shape[0]
        for k in range(n_components):
            try:
                ess_by_component[k] += ess_sokal(thetas[:, k], c=c).ess
            except DegenerateSeriesError:
                ess_by_component[k] += 1.0  # a frozen component counts one sample
    ess = float(ess_by_component.min())
    report = EssReport("sokal_autocorrelation", min(ess, n_post), n_post)
    return performance_report(
        burn_in=multichain.burn_in_report()["total"],
        ess_report=report,
        total_sims=multichain.n_sims,
        n_post_burn_in=n_post,
    )


def sis_performance(sis_result) -> PerformanceReport:
    """Report for a sequential run: ESS from the final-stage weights."""
    system = sis_result.system
    return performance_report(
        burn_in=sis_result.burn_in_sims(),
        ess_report=ess_weights(system.W),
        total_sims=system.cumulative_sim_count,
        n_post_burn_in=system.n_particles,
    )
