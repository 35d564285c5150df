"""Bundled generative models and the name registry the CLI resolves against."""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np

from ..core import GenerativeModel
from ..rng import substream
from .network import (
    NetworkModel,
    NetworkModelSpec,
    ObservationSpec,
    grow_network,
    observe_baitprey,
    observe_links,
    read_edge_list,
    summaries_network,
)
from .sirs import IncidenceSeries, SirsEnvironment, SirsModel, SirsParams, simulate_sirs
from .toy import ToyGaussModel, ToyGaussSpec

__all__ = [
    "ToyGaussModel",
    "ToyGaussSpec",
    "NetworkModel",
    "SirsModel",
    "MODEL_NAMES",
    "build_model",
]

_BUILDERS: dict[str, Callable] = {}


def _register(name: str):
    def deco(fn):
        _BUILDERS[name] = fn
        return fn

    return deco


@_register("toy-gauss")
def _build_toy(params: dict, base_dir: Path) -> GenerativeModel:
    spec = ToyGaussSpec(
        n_obs=int(params["n_obs"]),
        sigma=float(params["sigma"]),
        observed_mean=float(params["observed_mean"]),
        observed_sd=(None if params.get("observed_sd") is None else float(params["observed_sd"])),
    )
    return ToyGaussModel(spec)


def _read_node_list(path: Path) -> list:
    nodes = []
    for line in path.read_text().splitlines():
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        nodes.append(int(s) if s.lstrip("-").isdigit() else s)
    return nodes


def _build_network(variant: str, mode: str, params: dict, base_dir: Path) -> GenerativeModel:
    target_order = int(params["target_order"])
    bait_list = prey_list = None
    if "observed_edges" in params:
        g_obs = read_edge_list((base_dir / params["observed_edges"]).read_text())
    elif "synthetic_observed" in params:
        syn = params["synthetic_observed"]
        spec = NetworkModelSpec(variant=variant, target_order=target_order, **syn["params"])
        rng = substream(int(syn["seed"]))
        full = grow_network(spec, rng)
        if mode == "l":
            g_obs = observe_links(full, int(syn.get("m_obs", full.number_of_edges())), rng)
        else:
            g_obs, _ = observe_baitprey(
                full,
                int(syn.get("n_bait", max(1, full.number_of_nodes() // 4))),
                int(syn.get("n_prey", max(1, full.number_of_nodes() // 2))),
                rng,
            )
    else:
        raise ValueError("network models need 'observed_edges' or 'synthetic_observed'")
    if params.get("bait_list"):
        bait_list = _read_node_list(base_dir / params["bait_list"])
    if params.get("prey_list"):
        prey_list = _read_node_list(base_dir / params["prey_list"])
    if mode == "l":
        obs_spec = ObservationSpec("l", m_obs=int(params.get("m_obs", g_obs.number_of_edges())))
    else:
        n_bait = int(params.get("n_bait", len(bait_list) if bait_list else 0))
        n_prey = int(params.get("n_prey", len(prey_list) if prey_list else 0))
        obs_spec = ObservationSpec("bp", n_bait=n_bait, n_prey=n_prey)
    return NetworkModel(
        variant,
        target_order,
        obs_spec,
        summaries_network(g_obs),
        bait_list=bait_list,
        prey_list=prey_list,
    )


@_register("net-dd-pa-l")
def _build_net_ddpa_l(params, base_dir):
    return _build_network("dd_pa", "l", params, base_dir)


@_register("net-dd-pa-bp")
def _build_net_ddpa_bp(params, base_dir):
    return _build_network("dd_pa", "bp", params, base_dir)


@_register("net-dd-lnk-pa-l")
def _build_net_ddlnkpa_l(params, base_dir):
    return _build_network("dd_lnk_pa", "l", params, base_dir)


@_register("net-dd-lnk-pa-bp")
def _build_net_ddlnkpa_bp(params, base_dir):
    return _build_network("dd_lnk_pa", "bp", params, base_dir)


def _read_incidence(path: Path, env: SirsEnvironment, week_offset: int) -> IncidenceSeries:
    """Two-column text: ISO week (e.g. 1972-W05) or integer week index, count."""
    import datetime

    weeks, counts = [], []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'week count'")
        weeks.append(parts[0])
        counts.append(int(parts[1]))
    if weeks and "W" in weeks[0]:
        year0, wk0 = weeks[0].split("-W")
        day0 = datetime.date.fromisocalendar(int(year0), int(wk0), 1).toordinal()
        offset = day0 // 7
    else:
        offset = int(weeks[0]) if weeks else 0
    counts = np.asarray(counts)
    pops = np.array([env.population_at_week(offset + i) for i in range(len(counts))])
    return IncidenceSeries(
        counts=counts,
        week_offset=offset,
        populations=pops,
        season_split_day=env.season_split_day,
    )


@_register("sirs-seasonal")
def _build_sirs(params: dict, base_dir: Path) -> GenerativeModel:
    pop = params.get("population", 1.5e7)
    if isinstance(pop, str):
        pop = np.loadtxt(base_dir / pop)
    f_t = params.get("f_t")
    if isinstance(f_t, str):
        f_t = np.loadtxt(base_dir / f_t)
    env = SirsEnvironment(
        population=pop,
        mu=float(params.get("mu", 1.0 / 29200.0)),
        f_t=np.ones(52) if f_t is None else np.asarray(f_t, dtype=float),
        travelers_per_year=float(params.get("travelers_per_year", 5e6)),
        season_split_day=int(params.get("season_split_day", 182)),
    )
    horizon = int(params["horizon_weeks"])
    burn_in = int(params.get("burn_in_weeks", 0))
    if "observed_counts" in params:
        observed = _read_incidence(base_dir / params["observed_counts"], env, burn_in)
    elif "synthetic_observed" in params:
        syn = params["synthetic_observed"]
        true = SirsParams(**{k: float(v) for k, v in syn["params"].items()})
        observed = simulate_sirs(true, env, horizon, burn_in, substream(int(syn["seed"])))
    else:
        raise ValueError("sirs-seasonal needs 'observed_counts' or 'synthetic_observed'")
    return SirsModel(env, observed, horizon_weeks=horizon, burn_in_weeks=burn_in)


MODEL_NAMES = tuple(sorted(_BUILDERS))


def build_model(name: str, params: dict, base_dir: Path | str = ".") -> GenerativeModel:
    """Construct a registered model from its configuration parameters."""
    if name not in _BUILDERS:
        raise ValueError(f"unknown model {name!r}; registered: {', '.join(MODEL_NAMES)}")
    return _BUILDERS[name](params, Path(base_dir))
