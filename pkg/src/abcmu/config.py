"""Run configuration: JSON loading, validation with anchored messages, and
resolution into ready-to-run sampler ingredients.

A config resolves to explicit tolerance rows before anything runs, so the
metadata emitted next to a trace is itself a valid config that reproduces
the run byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BoxPrior, GaussianRandomWalkProposal, GenerativeModel, ToleranceSchedule
from .models import MODEL_NAMES, build_model
from .samplers import build_geometric_schedule, pilot_tolerance

__all__ = ["ConfigError", "ResolvedRun", "load_config", "resolve_run"]

SAMPLER_KINDS = ("rej", "rej-mu", "mh-mu", "sis-mu", "hybrid-mu")


class ConfigError(Exception):
    """Invalid configuration; the message is anchored to a line or key path."""


def load_config(path: Path | str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    # a metadata file emitted by a previous run embeds the resolved config
    if "config" in data and isinstance(data["config"], dict):
        return data["config"]
    return data


def _need(cfg: dict, key: str, anchor: str):
    if key not in cfg:
        raise ConfigError(f"{anchor}.{key}: required key is missing")
    return cfg[key]


@dataclass
class ResolvedRun:
    """Everything a run needs, plus the resolved config for the metadata."""

    model: GenerativeModel
    prior: BoxPrior
    proposal: GaussianRandomWalkProposal
    schedule: ToleranceSchedule | None
    sampler_kind: str
    sampler_options: dict
    seed: int
    output_dir: Path
    workers: int
    plots: list[tuple[str, str]]
    ash_options: dict
    resolved: dict


def _resolve_prior(cfg: dict, model: GenerativeModel) -> BoxPrior:
    if "prior" not in cfg:
        return model.default_prior()
    p = cfg["prior"]
    names = tuple(p.get("names", model.parameter_names))
    try:
        return BoxPrior(names, np.asarray(p["lower"], dtype=float), np.asarray(p["upper"], dtype=float))
    except KeyError as e:
        raise ConfigError(f"prior.{e.args[0]}: required key is missing") from e
    except ValueError as e:
        raise ConfigError(f"prior: {e}") from e


def _resolve_proposal(cfg: dict, prior: BoxPrior) -> GaussianRandomWalkProposal:
    if "proposal" not in cfg:
        return GaussianRandomWalkProposal((prior.upper - prior.lower) / 10.0)
    p = cfg["proposal"]
    try:
        return GaussianRandomWalkProposal(
            np.asarray(_need(p, "stddevs", "proposal"), dtype=float), float(p.get("scale", 1.0))
        )
    except ValueError as e:
        raise ConfigError(f"proposal: {e}") from e


def _resolve_tolerances(cfg: dict, model, prior, kind: str, seed: int) -> tuple:
    """Returns (schedule or None, sampler tolerance options, resolved dict)."""
    tol = _need(cfg, "tolerances", "")
    if kind == "rej":
        if "tau" not in tol:
            raise ConfigError("tolerances.tau: the rej sampler needs a single tau")
        tau = float(tol["tau"])
        if tau <= 0:
            raise ConfigError("tolerances.tau: must be positive")
        return None, {"tau": tau}, {"tau": tau}
    if kind == "rej-mu":
        row = tol.get("row", tol.get("rows", [None])[-1])
        if row is None:
            raise ConfigError("tolerances.row: the rej-mu sampler needs a tolerance row")
        row = np.asarray(row, dtype=float)
        if row.size != model.n_summaries or np.any(row <= 0):
            raise ConfigError(
                f"tolerances.row: need {model.n_summaries} positive values, got {row.tolist()}"
            )
        return None, {"tau_row": row}, {"row": row.tolist()}
    # staged samplers
    if "rows" in tol:
        try:
            schedule = ToleranceSchedule(np.asarray(tol["rows"], dtype=float))
        except ValueError as e:
            raise ConfigError(f"tolerances.rows: {e}") from e
    else:
        final = np.asarray(_need(tol, "final_row", "tolerances"), dtype=float)
        n_stages = int(_need(tol, "n_stages", "tolerances"))
        factor = float(tol.get("factor", 0.5))
        if "first_row" in tol:
            first = np.asarray(tol["first_row"], dtype=float)
        elif "pilot_n" in tol:
            first = pilot_tolerance(model, prior, int(tol["pilot_n"]), seed)
            first = np.maximum(first, final)
        else:
            raise ConfigError("tolerances: need 'rows', 'first_row' or 'pilot_n'")
        try:
            schedule = build_geometric_schedule(first, final, n_stages, factor)
        except ValueError as e:
            raise ConfigError(f"tolerances: {e}") from e
    if schedule.n_summaries != model.n_summaries:
        raise ConfigError(
            f"tolerances: rows have {schedule.n_summaries} entries, model has "
            f"{model.n_summaries} summaries"
        )
    return schedule, {}, {"rows": schedule.taus.tolist()}


def resolve_run(cfg: dict, base_dir: Path | str = ".") -> ResolvedRun:
    """Validate a config dict and build the run ingredients.

    Raises ConfigError with a key-path anchor on the first problem found.
    """
    base_dir = Path(base_dir)
    model_cfg = _need(cfg, "model", "")
    name = _need(model_cfg, "name", "model")
    if name not in MODEL_NAMES:
        raise ConfigError(f"model.name: unknown model {name!r}; registered: {', '.join(MODEL_NAMES)}")
    if "seed" not in cfg:
        raise ConfigError("seed: required key is missing (no silent nondeterminism)")
    seed = int(cfg["seed"])

    sampler_cfg = _need(cfg, "sampler", "")
    kind = _need(sampler_cfg, "kind", "sampler")
    if kind not in SAMPLER_KINDS:
        raise ConfigError(f"sampler.kind: unknown kind {kind!r}; one of {', '.join(SAMPLER_KINDS)}")

    try:
        model = build_model(name, {k: v for k, v in model_cfg.items() if k != "name"}, base_dir)
    except (ValueError, OSError, KeyError) as e:
        raise ConfigError(f"model: {e}") from e

    prior = _resolve_prior(cfg, model)
    if len(prior.names) != model.n_params:
        raise ConfigError(
            f"prior: has {len(prior.names)} components, model needs {model.n_params}"
        )
    proposal = _resolve_proposal(cfg, prior)
    if proposal.dim != prior.dim:
        raise ConfigError("proposal.stddevs: dimension must match the prior")

    schedule, tol_options, tol_resolved = _resolve_tolerances(cfg, model, prior, kind, seed)

    options = {k: v for k, v in sampler_cfg.items() if k != "kind"}
    options.update(tol_options)

    workers = int(cfg.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers: must be at least 1")

    plots = []
    for pair in cfg.get("plots", []):
        if len(pair) != 2:
            raise ConfigError(f"plots: each entry needs two summary names, got {pair!r}")
        for p in pair:
            if p not in model.summary_names:
                raise ConfigError(
                    f"plots: unknown summary {p!r}; valid: {', '.join(model.summary_names)}"
                )
        plots.append((pair[0], pair[1]))

    ash_options = {
        "n_bins": int(cfg.get("ash", {}).get("n_bins", 30)),
        "m_shifts": int(cfg.get("ash", {}).get("m_shifts", 4)),
    }

    resolved = dict(cfg)
    resolved["tolerances"] = tol_resolved
    resolved["seed"] = seed
    resolved["workers"] = workers
    resolved.setdefault("output_dir", "abcmu-out")
    return ResolvedRun(
        model=model,
        prior=prior,
        proposal=proposal,
        schedule=schedule,
        sampler_kind=kind,
        sampler_options=options,
        seed=seed,
        output_dir=Path(resolved["output_dir"]),
        workers=workers,
        plots=plots,
        ash_options=ash_options,
        resolved=resolved,
    )
