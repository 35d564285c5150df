"""The inference algorithms: rejection, Metropolis-Hastings, sequential
importance sampling with rejection control, and the MH-seeded hybrid.

All samplers emit (theta, error-vector) draws from the product-kernel target
on the joint parameter/error space. Acceptance kernels are indicators, so
every accept/reject step is a deterministic window test |eps_k| <= tau_k/2;
no acceptance randomness is consumed, which keeps paired runs on a shared
stream in lockstep.

Randomness is organized as one substream per logical task (chain, or
particle slot within a stage), derived from the run seed by index. Results
are therefore byte-identical for a fixed seed regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .core import (
    BoxPrior,
    CannotInitializeError,
    DistanceDomainError,
    ErrorVector,
    GaussianRandomWalkProposal,
    GenerativeModel,
    ParameterVector,
    ToleranceSchedule,
    distance_linf_combine,
    inside_windows,
    kernel_product,
)
from .rng import substream

if TYPE_CHECKING:
    from .diagnostics import PerformanceReport

__all__ = [
    "RejectionResult",
    "MhChainState",
    "MhTrace",
    "MultiChainResult",
    "Particle",
    "ParticleSystem",
    "SisStageInfo",
    "SisResult",
    "HybridResult",
    "AnnealingPolicy",
    "rej_abc",
    "rej_abcmu",
    "mh_abcmu",
    "mh_multichain",
    "sis_abcmu",
    "hybrid_abcmu",
    "anneal_next",
    "build_geometric_schedule",
    "pilot_tolerance",
]

DEFAULT_REJECTION_BUDGET = 10_000_000
DEFAULT_ATTEMPTS_PER_PARTICLE = 10_000
DEFAULT_INIT_ATTEMPTS = 10_000


def _errors_at(model: GenerativeModel, theta: ParameterVector, rng) -> np.ndarray | None:
    """Simulate at theta and return the error vector, or None when the
    distance is undefined for that simulation (counts as a rejection)."""
    try:
        return model.draw_errors(theta, rng).errors
    except DistanceDomainError:
        return None


# ---------------------------------------------------------------------------
# rejection samplers


@dataclass
class RejectionResult:
    """Accepted draws of a rejection run.

    `errors` has shape (n, K) for the per-summary sampler and (n,) for the
    combined-error sampler. `sim_indices[i]` is the 0-based index of the
    simulation that produced acceptance i, so paired runs on a shared stream
    can be compared acceptance-by-acceptance. `complete` is False when the
    simulation budget ran out first.
    """

    thetas: np.ndarray
    errors: np.ndarray
    sim_indices: np.ndarray
    n_sims: int
    complete: bool
    parameter_names: tuple[str, ...]
    summary_names: tuple[str, ...]

    @property
    def n_accepted(self) -> int:
        return self.thetas.shape[0]


def _rejection_loop(model, prior, n_accept, seed, max_sims, accept_fn, combined):
    rng = substream(seed)
    thetas, errors, idx = [], [], []
    n_sims = 0
    while len(thetas) < n_accept and n_sims < max_sims:
        theta = prior.sample(rng)
        eps = _errors_at(model, theta, rng)
        n_sims += 1
        if eps is None:
            continue
        value = distance_linf_combine(eps) if combined else eps
        if accept_fn(value):
            thetas.append(theta.values)
            errors.append(value)
            idx.append(n_sims - 1)
    d = prior.dim
    return RejectionResult(
        thetas=np.array(thetas, dtype=float).reshape(len(thetas), d),
        errors=np.array(errors, dtype=float),
        sim_indices=np.array(idx, dtype=int),
        n_sims=n_sims,
        complete=len(thetas) >= n_accept,
        parameter_names=prior.names,
        summary_names=model.summary_names,
    )


def rej_abc(
    model: GenerativeModel,
    prior: BoxPrior,
    tau: float,
    n_accept: int,
    seed: int,
    max_sims: int = DEFAULT_REJECTION_BUDGET,
) -> RejectionResult:
    """Plain rejection sampling on the combined (max-magnitude) error.

    Draws theta from the prior, simulates, and accepts when the combined
    error max_k |eps_k| is within tau/2. Returns exactly `n_accept` draws
    unless the simulation budget is exhausted first (then `complete` is
    False and the partial result is returned).
    """
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError("tau must be positive and finite")
    if n_accept < 0:
        raise ValueError("n_accept must be nonnegative")
    return _rejection_loop(
        model, prior, n_accept, seed, max_sims, lambda e: e <= tau / 2.0, combined=True
    )


def rej_abcmu(
    model: GenerativeModel,
    prior: BoxPrior,
    tau_row: Sequence[float],
    n_accept: int,
    seed: int,
    max_sims: int = DEFAULT_REJECTION_BUDGET,
) -> RejectionResult:
    """Rejection sampling on the joint per-summary error space.

    Accepts when every |eps_k| <= tau_k/2; retained error vectors are the
    model-criticism payload.
    """
    taus = np.asarray(tau_row, dtype=float)
    if taus.ndim != 1 or taus.size != model.n_summaries:
        raise ValueError("tau_row must have one tolerance per summary")
    if np.any(taus <= 0):
        raise ValueError("tolerances must be positive")
    if n_accept < 0:
        raise ValueError("n_accept must be nonnegative")
    return _rejection_loop(
        model, prior, n_accept, seed, max_sims, lambda e: inside_windows(e, taus), combined=False
    )


# ---------------------------------------------------------------------------
# annealing


@dataclass(frozen=True)
class AnnealingPolicy:
    """Rule for producing the next tolerance row.

    geometric: tau <- max(final, factor * tau).
    quantile: tau_k <- max(final_k, min(tau_k, 2 * q-quantile of recent |eps_k|)).
    fixed_schedule rows are prebuilt, so anneal_next rejects that mode.
    `proposal_scale_rule`, when given, lists one proposal-scale multiplier
    per stage; otherwise scales follow the tolerance rows.
    """

    mode: str
    final_row: np.ndarray
    factor: float | None = None
    q: float | None = None
    proposal_scale_rule: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mode not in ("fixed_schedule", "geometric", "quantile"):
            raise ValueError(f"unknown annealing mode {self.mode!r}")
        final = np.asarray(self.final_row, dtype=float)
        if final.ndim != 1 or np.any(final <= 0):
            raise ValueError("final_row must be a 1-D row of positive tolerances")
        object.__setattr__(self, "final_row", final)
        if self.mode == "geometric" and not (self.factor is not None and 0 < self.factor < 1):
            raise ValueError("geometric mode needs factor in (0, 1)")
        if self.mode == "quantile" and not (self.q is not None and 0 < self.q < 1):
            raise ValueError("quantile mode needs q in (0, 1)")


def anneal_next(
    policy: AnnealingPolicy, current_row: Sequence[float], recent_errors: np.ndarray | None
) -> np.ndarray:
    """Next tolerance row under the policy; never increases, floors at final."""
    current = np.asarray(current_row, dtype=float)
    final = policy.final_row
    if current.shape != final.shape:
        raise ValueError("current row and final row must have equal length")
    if policy.mode == "fixed_schedule":
        raise ValueError("fixed_schedule rows are prebuilt; anneal_next does not apply")
    if policy.mode == "geometric":
        return np.maximum(final, policy.factor * current)
    # quantile
    eps = None if recent_errors is None else np.asarray(recent_errors, dtype=float)
    if eps is None or eps.size == 0:
        return np.maximum(final, 0.9 * current)
    if eps.ndim == 1:
        eps = eps[:, None]
    targets = 2.0 * np.quantile(np.abs(eps), policy.q, axis=0)
    return np.maximum(final, np.minimum(current, targets))


def build_geometric_schedule(
    first_row: Sequence[float], final_row: Sequence[float], n_stages: int, factor: float
) -> ToleranceSchedule:
    """Stack geometric anneal_next steps into an explicit schedule."""
    policy = AnnealingPolicy("geometric", np.asarray(final_row, dtype=float), factor=factor)
    rows = [np.asarray(first_row, dtype=float)]
    for _ in range(n_stages - 1):
        rows.append(anneal_next(policy, rows[-1], None))
    return ToleranceSchedule(np.array(rows))


def pilot_tolerance(
    model: GenerativeModel, prior: BoxPrior, n_pilot: int, seed: int, headroom: float = 1.0
) -> np.ndarray:
    """First tolerance row from a prior-predictive pilot batch.

    Returns headroom * 2 * max|eps_k| over the pilot draws, i.e. the
    q = 1 quantile rule, so every pilot draw would fall inside the windows.
    This constructive choice is a pragmatic default, not a prescribed rule.
    """
    rng = substream(seed)
    eps_list = []
    attempts = 0
    while len(eps_list) < n_pilot and attempts < 10 * n_pilot:
        attempts += 1
        eps = _errors_at(model, prior.sample(rng), rng)
        if eps is not None:
            eps_list.append(eps)
    if not eps_list:
        raise CannotInitializeError("pilot batch produced no valid error vectors")
    return headroom * 2.0 * np.max(np.abs(np.array(eps_list)), axis=0)


def _stage_scales(schedule: ToleranceSchedule, proposal_scales) -> np.ndarray:
    """Per-stage proposal-scale multipliers.

    Default tracks the tolerance rows: scale(n) is the geometric mean of
    row(n)/row(1), which reduces to factor^(n-1) for a geometric schedule.
    """
    if proposal_scales is not None:
        scales = np.asarray(proposal_scales, dtype=float)
        if scales.shape != (schedule.n_stages,) or np.any(scales <= 0):
            raise ValueError("proposal_scales must give one positive multiplier per stage")
        return scales
    ratios = schedule.taus / schedule.taus[0]
    return np.exp(np.mean(np.log(ratios), axis=1))


# ---------------------------------------------------------------------------
# Metropolis-Hastings


@dataclass
class MhChainState:
    """Current position of one chain on the joint (theta, eps) space."""

    theta: ParameterVector
    errors: ErrorVector
    kernel_value: float
    stage: int
    iteration: int = 0
    accepted_count: int = 0
    sim_count: int = 0


@dataclass
class MhTrace:
    """Per-iteration record of one chain plus its counters.

    Iteration i (1-based) left the chain at thetas[i-1]; `stages[i-1]` is the
    tolerance stage after that iteration. `burn_in_iteration` is the first
    iteration at which the final tolerance row was reached (0 when already
    reached at initialization, None when never reached).
    """

    thetas: np.ndarray
    errors: np.ndarray
    accepted: np.ndarray
    stages: np.ndarray
    sim_counts: np.ndarray
    burn_in_iteration: int | None
    n_sims: int
    init_sims: int
    final_state: MhChainState
    parameter_names: tuple[str, ...]
    summary_names: tuple[str, ...]

    @property
    def n_iterations(self) -> int:
        return self.thetas.shape[0]

    def post_burn_in(self) -> tuple[np.ndarray, np.ndarray]:
        """(thetas, errors) of iterations after the annealing completed."""
        if self.burn_in_iteration is None:
            k = self.n_iterations
        else:
            k = self.burn_in_iteration
        return self.thetas[k:], self.errors[k:]


def _advance_stage(state_stage, eps, schedule):
    stage = state_stage
    while stage < schedule.n_stages and inside_windows(eps, schedule.row(stage + 1)):
        stage += 1
    return stage


def mh_abcmu(
    model: GenerativeModel,
    prior: BoxPrior,
    proposal: GaussianRandomWalkProposal,
    schedule: ToleranceSchedule,
    n_iter: int,
    theta0: ParameterVector | None,
    seed: int,
    stream_index: int = 0,
    proposal_scales: Sequence[float] | None = None,
    init_attempts: int = DEFAULT_INIT_ATTEMPTS,
    stop_after_post: int | None = None,
) -> MhTrace:
    """Metropolis-Hastings on the joint (theta, eps) space with annealing.

    At each step a move theta' ~ q is proposed, a fresh dataset is simulated
    at theta', and the move is accepted with probability

        min{1, [q(theta'->theta) pi(theta') prod_k kappa(eps'_k; tau_k)] /
               [q(theta->theta') pi(theta)  prod_k kappa(eps_k;  tau_k)]}

    With indicator kernels, a symmetric proposal and a uniform prior this is
    a pure window test. The tolerance row advances to the next stage as soon
    as the current error vector fits it, shrinking the proposal by the
    per-stage scale rule; burn-in is the iteration at which the final row is
    first reached.

    `theta0` defaults to a prior draw on this chain's stream. Initialization
    re-simulates at theta0 until the stage-1 window is hit (bounded by
    `init_attempts`). When `stop_after_post` is given the chain stops early
    once that many post-burn-in iterations exist.
    """
    if schedule.n_summaries != model.n_summaries:
        raise ValueError("schedule width must match the model's summary count")
    if n_iter < 0:
        raise ValueError("n_iter must be nonnegative")
    rng = substream(seed, stream_index)
    scales = _stage_scales(schedule, proposal_scales)

    if theta0 is None:
        theta0 = prior.sample(rng)
    if prior.density(theta0) == 0:
        raise CannotInitializeError("theta0 is outside the prior support")

    # initialization: re-simulate at theta0 until inside the stage-1 windows
    n_sims = 0
    eps0 = None
    for _ in range(init_attempts):
        eps = _errors_at(model, theta0, rng)
        n_sims += 1
        if eps is not None and inside_windows(eps, schedule.row(1)):
            eps0 = eps
            break
    if eps0 is None:
        raise CannotInitializeError(
            f"no simulation at theta0 hit the stage-1 window in {init_attempts} attempts"
        )
    init_sims = n_sims

    stage = _advance_stage(1, eps0, schedule)
    state = MhChainState(
        theta=theta0,
        errors=ErrorVector(eps0),
        kernel_value=kernel_product(eps0, schedule.row(stage)),
        stage=stage,
        sim_count=n_sims,
    )
    burn_in = 0 if stage == schedule.n_stages else None

    thetas = np.empty((n_iter, prior.dim))
    errors = np.empty((n_iter, model.n_summaries))
    accepted = np.zeros(n_iter, dtype=bool)
    stages = np.empty(n_iter, dtype=int)
    sim_counts = np.empty(n_iter, dtype=int)
    n_done = 0

    cur_theta = theta0.values
    cur_eps = eps0
    for it in range(1, n_iter + 1):
        tau_row = schedule.row(state.stage)
        q = proposal.scaled(scales[state.stage - 1])
        prop = q.sample(cur_theta, rng)
        accept = False
        if prior.contains(prop):
            theta_prop = ParameterVector(prop, prior.names)
            eps_prop = _errors_at(model, theta_prop, rng)
            state.sim_count += 1
            if eps_prop is not None:
                num = q.density(prop, cur_theta) * prior.density(prop) * kernel_product(eps_prop, tau_row)
                den = q.density(cur_theta, prop) * prior.density(cur_theta) * state.kernel_value
                ratio = num / den
                if ratio >= 1.0:
                    accept = True
                elif ratio > 0.0:
                    accept = rng.uniform() < ratio
        if accept:
            cur_theta = prop
            cur_eps = eps_prop
            state.accepted_count += 1
            new_stage = _advance_stage(state.stage, cur_eps, schedule)
            if new_stage != state.stage:
                state.stage = new_stage
            state.kernel_value = kernel_product(cur_eps, schedule.row(state.stage))
            if burn_in is None and state.stage == schedule.n_stages:
                burn_in = it
        thetas[it - 1] = cur_theta
        errors[it - 1] = cur_eps
        accepted[it - 1] = accept
        stages[it - 1] = state.stage
        sim_counts[it - 1] = state.sim_count
        state.iteration = it
        n_done = it
        if stop_after_post is not None and burn_in is not None and it - burn_in >= stop_after_post:
            break

    state.theta = ParameterVector(cur_theta, prior.names)
    state.errors = ErrorVector(cur_eps)
    return MhTrace(
        thetas=thetas[:n_done],
        errors=errors[:n_done],
        accepted=accepted[:n_done],
        stages=stages[:n_done],
        sim_counts=sim_counts[:n_done],
        burn_in_iteration=burn_in,
        n_sims=state.sim_count,
        init_sims=init_sims,
        final_state=state,
        parameter_names=prior.names,
        summary_names=model.summary_names,
    )


@dataclass
class MultiChainResult:
    """Independent chains plus the annealing-completion report."""

    traces: list[MhTrace | None]
    failures: dict[int, str]
    parameter_names: tuple[str, ...]
    summary_names: tuple[str, ...]

    @property
    def n_chains(self) -> int:
        return len(self.traces)

    @property
    def completed(self) -> list[MhTrace]:
        return [t for t in self.traces if t is not None]

    @property
    def n_sims(self) -> int:
        return sum(t.n_sims for t in self.completed)

    def burn_in_report(self) -> dict:
        """Per-chain annealing completion iteration and their sum.

        A chain that never reached the final tolerance row contributes its
        full length (it never left burn-in).
        """
        per_chain = {}
        for c, t in enumerate(self.traces):
            if t is None:
                per_chain[c] = None
            elif t.burn_in_iteration is None:
                per_chain[c] = t.n_iterations
            else:
                per_chain[c] = t.burn_in_iteration
        total = sum(v for v in per_chain.values() if v is not None)
        return {"per_chain": per_chain, "total": total}

    def pooled_post_burn_in(self) -> tuple[np.ndarray, np.ndarray]:
        thetas, errors = [], []
        for t in self.completed:
            th, err = t.post_burn_in()
            thetas.append(th)
            errors.append(err)
        if not thetas:
            return (np.empty((0, len(self.parameter_names))), np.empty((0, len(self.summary_names))))
        return np.concatenate(thetas), np.concatenate(errors)


def mh_multichain(
    model: GenerativeModel,
    prior: BoxPrior,
    proposal: GaussianRandomWalkProposal,
    schedule: ToleranceSchedule,
    n_iter: int,
    n_chains: int,
    seed: int,
    proposal_scales: Sequence[float] | None = None,
    init_attempts: int = DEFAULT_INIT_ATTEMPTS,
    stop_after_post: int | None = None,
    workers: int = 1,
) -> MultiChainResult:
    """Run independent annealed chains started at overdispersed prior draws.

    Chain c runs on substream (seed, c); a chain that fails to initialize is
    recorded and the run continues. Results are identical for any worker
    count.
    """
    if n_chains < 2:
        raise ValueError("need at least 2 chains for the convergence report")

    def run_chain(c: int):
        try:
            return mh_abcmu(
                model,
                prior,
                proposal,
                schedule,
                n_iter,
                None,
                seed,
                stream_index=c,
                proposal_scales=proposal_scales,
                init_attempts=init_attempts,
                stop_after_post=stop_after_post,
            )
        except CannotInitializeError as e:
            return e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_chain, range(n_chains)))
    else:
        outcomes = [run_chain(c) for c in range(n_chains)]

    traces: list[MhTrace | None] = []
    failures: dict[int, str] = {}
    for c, out in enumerate(outcomes):
        if isinstance(out, CannotInitializeError):
            traces.append(None)
            failures[c] = str(out)
        else:
            traces.append(out)
    return MultiChainResult(traces, failures, prior.names, model.summary_names)


# ---------------------------------------------------------------------------
# sequential importance sampling with rejection control


@dataclass(frozen=True)
class Particle:
    """One weighted draw: ancestor index, position, errors, weights."""

    ancestor: int
    theta: ParameterVector
    errors: ErrorVector
    w: float
    W: float


@dataclass
class ParticleSystem:
    """The stage-n population as parallel arrays."""

    stage: int
    thetas: np.ndarray
    errors: np.ndarray
    ancestors: np.ndarray
    w: np.ndarray
    W: np.ndarray
    tau_row: np.ndarray
    cumulative_sim_count: int
    parameter_names: tuple[str, ...]
    summary_names: tuple[str, ...]

    @property
    def n_particles(self) -> int:
        return self.thetas.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(
            ancestor=int(self.ancestors[i]),
            theta=ParameterVector(self.thetas[i], self.parameter_names),
            errors=ErrorVector(self.errors[i]),
            w=float(self.w[i]),
            W=float(self.W[i]),
        )

    def validate(self):
        if abs(self.W.sum() - 1.0) > 1e-12:
            raise AssertionError("normalized weights must sum to 1")
        if np.any(self.w <= 0):
            raise AssertionError("retained particles must have positive weight")
        if not all(inside_windows(e, self.tau_row) for e in self.errors):
            raise AssertionError("every particle must sit inside the tolerance windows")

    def posterior_mean(self) -> np.ndarray:
        return self.W @ self.thetas


@dataclass
class SisStageInfo:
    stage: int
    tau_row: np.ndarray
    n_sims: int
    n_attempts: int
    proposal_scale: float


@dataclass
class SisResult:
    """Final particle system plus per-stage metadata.

    When a stage stalls (attempt cap exhausted) `system` is the last
    completed stage and `stalled_stage` names the one that failed.
    """

    system: ParticleSystem
    stages: list[SisStageInfo]
    history: list[ParticleSystem]
    stalled_stage: int | None = None

    @property
    def stalled(self) -> bool:
        return self.stalled_stage is not None

    @property
    def n_sims(self) -> int:
        return self.system.cumulative_sim_count

    def burn_in_sims(self) -> int:
        """Simulations spent before the final completed stage began.

        Counts everything in the cumulative tally, including simulations an
        incoming seed system carried in.
        """
        if not self.stages:
            return 0
        return self.system.cumulative_sim_count - self.stages[-1].n_sims


def _sis_initial_stage(model, prior, schedule, n_particles, seed, max_attempts):
    """Stage 1 from the prior. Draws outside the stage-1 windows are redrawn
    (rejection against the prior keeps all weights equal), so the first row
    should be generous; see pilot_tolerance."""
    tau1 = schedule.row(1)
    kernel_const = float(np.prod(1.0 / tau1))
    d, K = prior.dim, model.n_summaries
    thetas = np.empty((n_particles, d))
    errors = np.empty((n_particles, K))
    sims = np.zeros(n_particles, dtype=int)

    def fill(i: int) -> bool:
        rng = substream(seed, 1, i)
        for _ in range(max_attempts):
            theta = prior.sample(rng)
            eps = _errors_at(model, theta, rng)
            sims[i] += 1
            if eps is not None and inside_windows(eps, tau1):
                thetas[i] = theta.values
                errors[i] = eps
                return True
        return False

    ok = all([fill(i) for i in range(n_particles)])
    if not ok:
        raise CannotInitializeError(
            "stage-1 prior draws kept missing the first tolerance row; "
            "widen it (see pilot_tolerance) or seed from particles"
        )
    return ParticleSystem(
        stage=1,
        thetas=thetas,
        errors=errors,
        ancestors=np.full(n_particles, -1, dtype=int),
        w=np.full(n_particles, kernel_const),
        W=np.full(n_particles, 1.0 / n_particles),
        tau_row=tau1,
        cumulative_sim_count=int(sims.sum()),
        parameter_names=prior.names,
        summary_names=model.summary_names,
    )


def sis_abcmu(
    model: GenerativeModel,
    prior: BoxPrior,
    proposal: GaussianRandomWalkProposal,
    schedule: ToleranceSchedule,
    n_particles: int,
    seed: int,
    init: str | ParticleSystem = "from_prior",
    proposal_scales: Sequence[float] | None = None,
    max_attempts_per_particle: int = DEFAULT_ATTEMPTS_PER_PARTICLE,
    workers: int = 1,
) -> SisResult:
    """Sequential importance sampling with rejection control.

    With init="from_prior", stage 1 populates N particles from the prior at
    the (generous) first tolerance row with equal weights; stages 2..n* then
    each run the rejection-control loop: draw an ancestor proportional to
    the previous weights, perturb with the stage proposal, simulate, and
    keep the candidate only if every error lands inside the stage windows.
    An accepted particle i at stage n gets the importance weight

        w_i = pi(theta_i) / sum_j W_{n-1}^j M_n(theta_{n-1}^j -> theta_i)

    normalized over the stage. With a ParticleSystem as `init`, every row of
    the schedule runs the rejection-control loop against the incoming system
    (used by the hybrid pipeline); the incoming system may have a different
    particle count.

    Proposals falling outside the prior support are rejected before
    simulating (their weight would be zero). Each particle slot owns the
    stream (seed, stage, slot) and at most `max_attempts_per_particle`
    attempts; exhausting a slot stalls the stage and the last completed
    stage is returned.
    """
    if n_particles < 1:
        raise ValueError("need at least one particle")
    if schedule.n_summaries != model.n_summaries:
        raise ValueError("schedule width must match the model's summary count")
    scales = _stage_scales(schedule, proposal_scales)

    history: list[ParticleSystem] = []
    stages_info: list[SisStageInfo] = []

    if isinstance(init, ParticleSystem):
        prev = init
        loop_stages = range(1, schedule.n_stages + 1)
    elif init == "from_prior":
        prev = _sis_initial_stage(
            model, prior, schedule, n_particles, seed, max_attempts_per_particle
        )
        history.append(prev)
        stages_info.append(
            SisStageInfo(1, schedule.row(1), prev.cumulative_sim_count, prev.cumulative_sim_count, scales[0])
        )
        loop_stages = range(2, schedule.n_stages + 1)
    else:
        raise ValueError("init must be 'from_prior' or a ParticleSystem")

    d, K = prior.dim, model.n_summaries
    for n in loop_stages:
        tau_n = schedule.row(n)
        q_n = proposal.scaled(scales[n - 1])
        prev_thetas = prev.thetas
        prev_W = prev.W
        n_prev = prev.n_particles

        anc = np.empty(n_particles, dtype=int)
        thetas = np.empty((n_particles, d))
        errors = np.empty((n_particles, K))
        sims = np.zeros(n_particles, dtype=int)
        attempts = np.zeros(n_particles, dtype=int)

        def fill(i: int) -> bool:
            rng = substream(seed, n, i)
            for _ in range(max_attempts_per_particle):
                attempts[i] += 1
                j = int(rng.choice(n_prev, p=prev_W))
                cand = q_n.sample(prev_thetas[j], rng)
                if not prior.contains(cand):
                    continue
                eps = _errors_at(model, ParameterVector(cand, prior.names), rng)
                sims[i] += 1
                if eps is not None and inside_windows(eps, tau_n):
                    anc[i] = j
                    thetas[i] = cand
                    errors[i] = eps
                    return True
            return False

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                ok = all(list(pool.map(fill, range(n_particles))))
        else:
            ok = all([fill(i) for i in range(n_particles)])

        stage_sims = int(sims.sum())
        stages_info.append(SisStageInfo(n, tau_n, stage_sims, int(attempts.sum()), scales[n - 1]))
        if not ok:
            return SisResult(prev, stages_info, history, stalled_stage=n)

        # importance weights against the full previous generation
        w = np.empty(n_particles)
        prior_dens = np.array([prior.density(thetas[i]) for i in range(n_particles)])
        for i in range(n_particles):
            mix = float(prev_W @ q_n.density_from_many(prev_thetas, thetas[i]))
            w[i] = prior_dens[i] / mix
        W = w / w.sum()

        prev = ParticleSystem(
            stage=n,
            thetas=thetas,
            errors=errors,
            ancestors=anc,
            w=w,
            W=W,
            tau_row=tau_n,
            cumulative_sim_count=prev.cumulative_sim_count + stage_sims,
            parameter_names=prior.names,
            summary_names=model.summary_names,
        )
        history.append(prev)

    return SisResult(prev, stages_info, history)


# ---------------------------------------------------------------------------
# hybrid pipeline


@dataclass
class HybridResult:
    """MH-seeded sequential run with the combined performance metrics."""

    mh: MultiChainResult
    seed_system: ParticleSystem
    sis: SisResult
    report: "PerformanceReport"

    @property
    def system(self) -> ParticleSystem:
        return self.sis.system

    @property
    def n_sims(self) -> int:
        return self.system.cumulative_sim_count


def hybrid_abcmu(
    model: GenerativeModel,
    prior: BoxPrior,
    proposal: GaussianRandomWalkProposal,
    schedule: ToleranceSchedule,
    seed: int,
    n_chains: int = 4,
    post_burn_in_iterations: int = 500,
    thin: int = 20,
    n_seed: int = 100,
    n_particles: int = 1000,
    n_sis_stages: int = 2,
    max_chain_iterations: int = 100_000,
    proposal_scales: Sequence[float] | None = None,
    init_attempts: int = DEFAULT_INIT_ATTEMPTS,
    max_attempts_per_particle: int = DEFAULT_ATTEMPTS_PER_PARTICLE,
    workers: int = 1,
) -> HybridResult:
    """Seed the sequential sampler with thinned post-burn-in MCMC states.

    Runs `n_chains` annealed chains until each has `post_burn_in_iterations`
    iterations beyond its burn-in, pools those states chain by chain, keeps
    every `thin`-th and uses the first `n_seed` of them, equally weighted,
    as the incoming particle system for `n_sis_stages` rejection-control
    stages at the final tolerance row with `n_particles` particles.

    The returned metrics count every simulation, including MCMC burn-in, and
    report the three headline columns (burn-in, ESS per 1000, simulations
    per effective sample). Burn-in is the simulation count up to the start
    of the final sequential stage.
    """
    from .diagnostics import ess_weights, performance_report

    mh = mh_multichain(
        model,
        prior,
        proposal,
        schedule,
        max_chain_iterations,
        n_chains,
        seed,
        proposal_scales=proposal_scales,
        init_attempts=init_attempts,
        stop_after_post=post_burn_in_iterations,
        workers=workers,
    )
    thetas, errors = mh.pooled_post_burn_in()
    thinned = slice(0, None, max(1, thin))
    thetas, errors = thetas[thinned], errors[thinned]
    if thetas.shape[0] < n_seed:
        raise ValueError(
            f"only {thetas.shape[0]} thinned post-burn-in states available, need {n_seed}"
        )
    thetas, errors = thetas[:n_seed], errors[:n_seed]

    final_row = schedule.final_row
    seed_system = ParticleSystem(
        stage=0,
        thetas=thetas,
        errors=errors,
        ancestors=np.full(n_seed, -1, dtype=int),
        w=np.full(n_seed, 1.0),
        W=np.full(n_seed, 1.0 / n_seed),
        tau_row=final_row,
        cumulative_sim_count=mh.n_sims,
        parameter_names=prior.names,
        summary_names=model.summary_names,
    )

    sis_schedule = ToleranceSchedule(np.tile(final_row, (n_sis_stages, 1)))
    sis = sis_abcmu(
        model,
        prior,
        proposal,
        sis_schedule,
        n_particles,
        seed,  # sis streams live under (seed, stage, slot), chains under (seed, chain)
        init=seed_system,
        max_attempts_per_particle=max_attempts_per_particle,
        workers=workers,
    )

    final = sis.system
    ess = ess_weights(final.W)
    report = performance_report(
        burn_in=sis.burn_in_sims(),
        ess_report=ess,
        total_sims=final.cumulative_sim_count,
        n_post_burn_in=final.n_particles,
    )
    return HybridResult(mh=mh, seed_system=seed_system, sis=sis, report=report)
