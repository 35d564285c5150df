"""Stochastic seasonal SIRS epidemic simulator with influenza-style summaries.

Integer compartments (susceptible, infected, recovered) evolve in half-day
steps by competing-risk multinomial draws; transmission varies sinusoidally
over the year and a constant stream of infected visitors prevents stochastic
extinction. Reported weekly counts follow a Poisson observation model with a
reporting fraction and a seasonal true-positive-rate series. Five summaries
capture inter-seasonal variation, explosiveness and magnitude.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import (
    BoxPrior,
    DistanceDomainError,
    EmpiricalDistribution,
    ErrorVector,
    GenerativeModel,
    ParameterVector,
    Scalar,
    SummaryVector,
    distance_cvm,
    distance_signed,
)

__all__ = [
    "SirsParams",
    "SirsEnvironment",
    "SirsState",
    "IncidenceSeries",
    "derive_rates",
    "seasonal_beta",
    "endemic_equilibrium",
    "step_euler_multinomial",
    "simulate_sirs",
    "summaries_sirs",
    "distances_sirs",
    "SirsModel",
    "SIRS_SUMMARY_NAMES",
]

SIRS_SUMMARY_NAMES = ("cdf_dpk", "acf_dpk", "m_expl", "cdf_pk", "m_attr")

DAYS_PER_YEAR = 365.0
DEFAULT_MU = 1.0 / (80.0 * 365.0)  # 80-year life expectancy, per day
DEFAULT_TRAVELERS_PER_YEAR = 5e6
JULY_FIRST_DOY = 182  # season split: the week containing July 1


@dataclass(frozen=True)
class SirsParams:
    """Epidemiological parameters in their natural units.

    r0: basic reproductive number; infection_days: mean infectious period D
    (days); immunity_years: mean immunity duration (years); seasonality:
    amplitude of the sinusoidal transmission modulation; reporting: fraction
    of infecteds that get reported.
    """

    r0: float
    infection_days: float
    immunity_years: float
    seasonality: float
    reporting: float

    def __post_init__(self):
        if not (self.r0 > 0 and math.isfinite(self.r0)):
            raise ValueError("r0 must be positive")
        if not (self.infection_days > 0):
            raise ValueError("infection_days must be positive")
        if not (self.immunity_years > 0):
            raise ValueError("immunity_years must be positive")
        if not (0.0 <= self.seasonality < 1.0):
            raise ValueError("seasonality must lie in [0, 1)")
        if not (0.0 < self.reporting <= 1.0):
            raise ValueError("reporting must lie in (0, 1]")


@dataclass(frozen=True)
class SirsEnvironment:
    """Fixed demographic and observation context.

    population: constant size or per-week series; f_t: 52 weekly true
    positive rates in (0, 1], cycled over the year; season_split_day: the
    day of year at which winter seasons are separated.
    """

    population: float | np.ndarray = 1.5e7
    mu: float = DEFAULT_MU
    f_t: np.ndarray = field(default_factory=lambda: np.ones(52))
    travelers_per_year: float = DEFAULT_TRAVELERS_PER_YEAR
    season_split_day: int = JULY_FIRST_DOY

    def __post_init__(self):
        f = np.asarray(self.f_t, dtype=float)
        if f.shape != (52,) or np.any(f <= 0) or np.any(f > 1):
            raise ValueError("f_t must be 52 values in (0, 1]")
        object.__setattr__(self, "f_t", f)
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        pop = self.population
        if np.isscalar(pop):
            if pop <= 0:
                raise ValueError("population must be positive")
        else:
            arr = np.asarray(pop, dtype=float)
            if np.any(arr <= 0):
                raise ValueError("population series must be positive")
            object.__setattr__(self, "population", arr)

    def population_at_week(self, week: int) -> float:
        if np.isscalar(self.population):
            return float(self.population)
        return float(self.population[min(week, len(self.population) - 1)])

    def f_at_week(self, week: int) -> float:
        doy = (week * 7.0 + 3.5) % DAYS_PER_YEAR
        return float(self.f_t[min(int(doy // 7), 51)])


@dataclass
class SirsState:
    """Integer compartment counts at time t (days), with flow bookkeeping."""

    s: int
    i: int
    r: int
    t: float = 0.0
    births: int = 0
    deaths: int = 0

    @property
    def total(self) -> int:
        return self.s + self.i + self.r


@dataclass
class IncidenceSeries:
    """Weekly reported counts with the context needed to segment seasons."""

    counts: np.ndarray
    week_offset: int
    populations: np.ndarray
    season_split_day: int = JULY_FIRST_DOY
    extinct: bool = False

    def __post_init__(self):
        c = np.asarray(self.counts)
        if np.any(c < 0):
            raise ValueError("weekly counts must be nonnegative")
        self.counts = c.astype(np.int64)
        self.populations = np.asarray(self.populations, dtype=float)
        if self.populations.shape != self.counts.shape:
            raise ValueError("one population value per week is required")

    def __len__(self) -> int:
        return self.counts.size

    def season_ids(self) -> np.ndarray:
        """Season index of each week, split at the configured day of year."""
        weeks = np.arange(self.week_offset, self.week_offset + len(self))
        mid_days = weeks * 7.0 + 3.5
        return np.floor((mid_days - self.season_split_day) / DAYS_PER_YEAR).astype(int)

    def complete_seasons(self) -> list[np.ndarray]:
        """Week positions of each season fully inside the series window."""
        ids = self.season_ids()
        out = []
        for s in np.unique(ids):
            pos = np.flatnonzero(ids == s)
            if pos[0] > 0 and pos[-1] < len(self) - 1:
                out.append(pos)
        return out


def derive_rates(
    p: SirsParams,
    mu: float = DEFAULT_MU,
    travelers_per_year: float = DEFAULT_TRAVELERS_PER_YEAR,
) -> tuple[float, float, float, float]:
    """(beta, nu, gamma, i_v) from the natural parameterization.

    beta = r0 (nu + mu), nu = 1/D, gamma = 1/(365 * immunity_years). The
    visitor count i_v is the endemic-equilibrium infected fraction applied
    to the average number of travelers present per day; it clamps to zero
    (with a warning) when r0 <= 1.
    """
    nu = 1.0 / p.infection_days
    gamma = 1.0 / (DAYS_PER_YEAR * p.immunity_years)
    beta = p.r0 * (nu + mu)
    i_v = (mu + gamma) / (mu + gamma + nu) * (1.0 - 1.0 / p.r0) * travelers_per_year / DAYS_PER_YEAR
    if i_v < 0.0:
        warnings.warn("r0 <= 1 gives a negative visitor term; clamping to 0", stacklevel=2)
        i_v = 0.0
    return beta, nu, gamma, i_v


def seasonal_beta(beta: float, s: float, t_days: float) -> float:
    """Transmission rate at day t: beta * (1 + s * sin(2 pi t / 365))."""
    return beta * (1.0 + s * math.sin(2.0 * math.pi * t_days / DAYS_PER_YEAR))


def endemic_equilibrium(p: SirsParams, mu: float = DEFAULT_MU) -> tuple[float, float, float]:
    """(s, i, r) fractions of the non-seasonal deterministic steady state.

    From the stationarity of the mean dynamics: s* = 1/r0 and
    i* = (1 - 1/r0)(mu + gamma) / (mu + gamma + nu); disease-free when
    r0 <= 1.
    """
    if p.r0 <= 1.0:
        return 1.0, 0.0, 0.0
    nu = 1.0 / p.infection_days
    gamma = 1.0 / (DAYS_PER_YEAR * p.immunity_years)
    s_frac = 1.0 / p.r0
    i_frac = (1.0 - 1.0 / p.r0) * (mu + gamma) / (mu + gamma + nu)
    return s_frac, i_frac, 1.0 - s_frac - i_frac


def _competing_exits(count: int, rates: tuple[float, float], dt: float, rng) -> tuple[int, int]:
    """Multinomial competing-risk exits from one compartment over one step."""
    total = rates[0] + rates[1]
    if count == 0 or total == 0.0:
        return 0, 0
    p_exit = 1.0 - math.exp(-total * dt)
    p0 = rates[0] / total * p_exit
    p1 = rates[1] / total * p_exit
    draw = rng.multinomial(count, (p0, p1, 1.0 - p0 - p1))
    return int(draw[0]), int(draw[1])


def step_euler_multinomial(
    state: SirsState,
    beta_t: float,
    nu: float,
    gamma: float,
    mu: float,
    i_v: float,
    n_pop: float,
    dt: float,
    rng: np.random.Generator,
) -> tuple[SirsState, int]:
    """One half-day-style multinomial step; returns (next state, new infections).

    Each compartment's competing exit events j get probability
    (r_j / sum r)(1 - exp(-sum r * dt)) and the remainder stays. Exits from
    S are infection at rate beta_t (I + i_v)/N and death; from I recovery
    and death; from R immunity loss and death. Births are Poisson with mean
    mu N dt and enter S. All transitions apply simultaneously.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if min(state.s, state.i, state.r) < 0:
        raise ValueError("compartment counts must be nonnegative")
    infection_rate = beta_t * (state.i + i_v) / n_pop
    s_inf, s_die = _competing_exits(state.s, (infection_rate, mu), dt, rng)
    i_rec, i_die = _competing_exits(state.i, (nu, mu), dt, rng)
    r_loss, r_die = _competing_exits(state.r, (gamma, mu), dt, rng)
    births = int(rng.poisson(mu * n_pop * dt)) if mu > 0 else 0
    nxt = SirsState(
        s=state.s - s_inf - s_die + r_loss + births,
        i=state.i + s_inf - i_rec - i_die,
        r=state.r + i_rec - r_die - r_loss,
        t=state.t + dt,
        births=state.births + births,
        deaths=state.deaths + s_die + i_die + r_die,
    )
    if min(nxt.s, nxt.i, nxt.r) < 0:
        raise AssertionError("internal invariant violated: negative compartment")
    return nxt, s_inf


def simulate_sirs(
    params: SirsParams,
    env: SirsEnvironment,
    horizon_weeks: int,
    burn_in_weeks: int,
    rng: np.random.Generator,
    dt: float = 0.5,
) -> IncidenceSeries:
    """Simulate weekly reported incidence over `horizon_weeks`.

    Starts at the deterministic endemic equilibrium of the non-seasonal
    system, discards `burn_in_weeks`, accumulates the observation flow
    reporting * I / f_t alongside the state, and draws each weekly count
    Poisson with the week's accumulated flow as mean. Extinction can only
    happen when the visitor term is zero; it is flagged, not raised.
    """
    if horizon_weeks - burn_in_weeks < 104:
        raise ValueError("need at least 2 seasons after burn-in")
    beta, nu, gamma, i_v = derive_rates(params, env.mu, env.travelers_per_year)
    n0 = env.population_at_week(0)
    s_frac, i_frac, r_frac = endemic_equilibrium(params, env.mu)
    s0 = int(round(n0 * s_frac))
    i0 = int(round(n0 * i_frac))
    state = SirsState(s=s0, i=i0, r=int(round(n0)) - s0 - i0)

    steps_per_week = int(round(7.0 / dt))
    counts = np.zeros(horizon_weeks, dtype=np.int64)
    pops = np.zeros(horizon_weeks)
    extinct = False
    for week in range(horizon_weeks):
        n_pop = env.population_at_week(week)
        f_week = env.f_at_week(week)
        pops[week] = n_pop
        flow = 0.0
        for _ in range(steps_per_week):
            beta_t = seasonal_beta(beta, params.seasonality, state.t)
            state, _ = step_euler_multinomial(
                state, beta_t, nu, gamma, env.mu, i_v, n_pop, dt, rng
            )
            flow += params.reporting * state.i / f_week * dt
        counts[week] = rng.poisson(flow)
        if state.i == 0 and i_v == 0.0:
            extinct = True
    return IncidenceSeries(
        counts=counts[burn_in_weeks:],
        week_offset=burn_in_weeks,
        populations=pops[burn_in_weeks:],
        season_split_day=env.season_split_day,
        extinct=extinct,
    )


# ---------------------------------------------------------------------------
# summaries


def _lag2_autocorrelation(z: np.ndarray) -> float:
    if z.size < 4:
        raise ValueError("need at least 4 peak differences for the lag-2 autocorrelation")
    zc = z - z.mean()
    denom = float(np.sum(zc * zc))
    if denom == 0.0:
        raise ValueError("constant peak differences make the autocorrelation undefined")
    return float(np.sum(zc[:-2] * zc[2:]) / denom)


def summaries_sirs(series: IncidenceSeries) -> SummaryVector:
    """Five summaries of a weekly incidence series.

    Per complete season: the peak is the maximum weekly incidence
    standardized per 100,000 of that season's mid-season population.
    cdf_dpk: distribution of successive peak differences. acf_dpk: their
    lag-2 autocorrelation. m_expl: mean number of weeks per season at or
    above half that season's peak. cdf_pk: distribution of peaks. m_attr:
    mean seasonal attack rate, cumulative raw counts over the season's
    average population.
    """
    seasons = series.complete_seasons()
    if len(seasons) < 3:
        raise ValueError(f"need at least 3 complete seasons, found {len(seasons)}")
    peaks, expl, attack = [], [], []
    for pos in seasons:
        mid = pos[len(pos) // 2]
        standardized = series.counts[pos] * 1e5 / series.populations[mid]
        peak = float(standardized.max())
        peaks.append(peak)
        expl.append(float(np.sum(standardized >= peak / 2.0)))
        attack.append(float(series.counts[pos].sum() / series.populations[pos].mean()))
    peaks = np.array(peaks)
    dpk = np.diff(peaks)
    acf2 = _lag2_autocorrelation(dpk)
    return SummaryVector(
        (
            EmpiricalDistribution(np.sort(dpk)),
            Scalar(acf2),
            Scalar(float(np.mean(expl))),
            EmpiricalDistribution(np.sort(peaks)),
            Scalar(float(np.mean(attack))),
        )
    )


def _ecdf_at(samples: np.ndarray, c: float) -> float:
    return float(np.searchsorted(samples, c, side="right") / samples.size)


def distances_sirs(sim: SummaryVector, obs: SummaryVector) -> ErrorVector:
    """Per-summary errors between simulated and observed incidence summaries.

    cdf_dpk by the two-sample Cramer-von Mises statistic; acf_dpk, m_expl
    and m_attr by the log ratio simulated/observed; cdf_pk by the mean log
    ratio of the two peak CDFs evaluated at standardized peak sizes 200 and
    400. Any nonpositive log-ratio input rejects the simulation via
    DistanceDomainError.
    """
    if len(sim) != 5 or len(obs) != 5:
        raise ValueError("expected 5 summaries on both sides")
    eps = np.empty(5)
    eps[0] = distance_cvm(sim.entries[0], obs.entries[0])
    eps[1] = distance_signed(sim.entries[1], obs.entries[1], mode="log_ratio")
    eps[2] = distance_signed(sim.entries[2], obs.entries[2], mode="log_ratio")
    ratios = []
    for c in (200.0, 400.0):
        f_sim = _ecdf_at(sim.entries[3].samples, c)
        f_obs = _ecdf_at(obs.entries[3].samples, c)
        if f_sim <= 0.0 or f_obs <= 0.0:
            raise DistanceDomainError(f"peak CDF is zero at threshold {c}")
        ratios.append(math.log(f_sim / f_obs))
    eps[3] = float(np.mean(ratios))
    eps[4] = distance_signed(sim.entries[4], obs.entries[4], mode="log_ratio")
    return ErrorVector(eps)


# ---------------------------------------------------------------------------
# generative model


class SirsModel(GenerativeModel):
    """Seasonal SIRS simulator bound to an observed incidence series."""

    parameter_names = ("R0", "infection_days", "immunity_years", "seasonality", "reporting")
    summary_names = SIRS_SUMMARY_NAMES

    def __init__(
        self,
        env: SirsEnvironment,
        observed: IncidenceSeries | SummaryVector,
        horizon_weeks: int,
        burn_in_weeks: int,
        dt: float = 0.5,
    ):
        self.env = env
        self.horizon_weeks = int(horizon_weeks)
        self.burn_in_weeks = int(burn_in_weeks)
        self.dt = float(dt)
        # season segmentation is deterministic in the horizon, so a horizon
        # too short for the summaries is a configuration error, not a
        # per-simulation rejection
        n_weeks = self.horizon_weeks - self.burn_in_weeks
        probe = IncidenceSeries(
            counts=np.zeros(n_weeks, dtype=np.int64),
            week_offset=self.burn_in_weeks,
            populations=np.ones(n_weeks),
            season_split_day=env.season_split_day,
        )
        n_seasons = len(probe.complete_seasons())
        if n_seasons < 5:
            raise ValueError(
                f"horizon gives only {n_seasons} complete seasons; need at least 5 "
                "(4 peak differences) for the lag-2 autocorrelation summary"
            )
        if isinstance(observed, IncidenceSeries):
            self.observed = summaries_sirs(observed)
        else:
            self.observed = observed

    def _params(self, theta: ParameterVector) -> SirsParams:
        r0, d, gam, s, rho = theta.values
        return SirsParams(r0, d, gam, s, rho)

    def simulate(self, theta: ParameterVector, rng: np.random.Generator) -> SummaryVector:
        series = simulate_sirs(
            self._params(theta), self.env, self.horizon_weeks, self.burn_in_weeks, rng, self.dt
        )
        try:
            return summaries_sirs(series)
        except ValueError as e:
            # degenerate dynamics (e.g. constant peak differences) reject
            raise DistanceDomainError(str(e)) from e

    def distances(self, simulated: SummaryVector) -> ErrorVector:
        return distances_sirs(simulated, self.observed)

    def default_prior(self) -> BoxPrior:
        return BoxPrior(
            self.parameter_names,
            np.array([1.0, 2.2, 1.0, 0.075, 0.04]),
            np.array([20.0, 2.8, 160.0, 0.6, 0.4]),
        )
