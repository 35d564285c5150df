"""Trace persistence: one CSV record per MCMC iteration, per particle per
stage, or per accepted rejection draw.

Columns, in order: kind (mh|sis|rej), chain_or_stage, index, ancestor (-1
where not applicable), one theta_<name> column per parameter, one
eps_<name> column per summary, weight (1.0 for unweighted kinds), accepted
(0/1), cum_sims. Floats are serialized with 17 significant digits so a
round trip is bit-faithful.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["TraceData", "trace_rows", "write_trace", "read_trace", "format_float"]

FIXED_COLUMNS = ("kind", "chain_or_stage", "index", "ancestor")
TAIL_COLUMNS = ("weight", "accepted", "cum_sims")


def format_float(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class TraceData:
    """Parsed trace with the records as parallel arrays."""

    kinds: list[str]
    chain_or_stage: np.ndarray
    index: np.ndarray
    ancestors: np.ndarray
    thetas: np.ndarray
    errors: np.ndarray
    weights: np.ndarray
    accepted: np.ndarray
    cum_sims: np.ndarray
    parameter_names: tuple[str, ...]
    summary_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.kinds)


def trace_rows(result) -> list[list]:
    """Flatten a sampler result into trace records.

    Accepts a RejectionResult, MhTrace, MultiChainResult, SisResult, or
    HybridResult (whose MCMC and sequential parts are concatenated).
    """
    from .samplers import HybridResult, MhTrace, MultiChainResult, RejectionResult, SisResult

    rows: list[list] = []
    if isinstance(result, RejectionResult):
        errors = result.errors if result.errors.ndim == 2 else result.errors[:, None]
        for i in range(result.n_accepted):
            rows.append(
                ["rej", 0, int(result.sim_indices[i]), -1]
                + list(result.thetas[i])
                + list(errors[i])
                + [1.0, 1, int(result.sim_indices[i]) + 1]
            )
    elif isinstance(result, MhTrace):
        rows.extend(_mh_rows(result, chain=0))
    elif isinstance(result, MultiChainResult):
        for c, t in enumerate(result.traces):
            if t is not None:
                rows.extend(_mh_rows(t, chain=c))
    elif isinstance(result, SisResult):
        for system in result.history:
            rows.extend(_sis_rows(system))
    elif isinstance(result, HybridResult):
        rows.extend(trace_rows(result.mh))
        for system in result.sis.history:
            rows.extend(_sis_rows(system))
    else:
        raise TypeError(f"cannot serialize {type(result).__name__} as a trace")
    return rows


def _mh_rows(t, chain: int) -> list[list]:
    rows = []
    for i in range(t.n_iterations):
        rows.append(
            ["mh", chain, i + 1, -1]
            + list(t.thetas[i])
            + list(t.errors[i])
            + [1.0, int(t.accepted[i]), int(t.sim_counts[i])]
        )
    return rows


def _sis_rows(system) -> list[list]:
    rows = []
    for i in range(system.n_particles):
        rows.append(
            ["sis", system.stage, i, int(system.ancestors[i])]
            + list(system.thetas[i])
            + list(system.errors[i])
            + [float(system.W[i]), 1, system.cumulative_sim_count]
        )
    return rows


def header_for(parameter_names, summary_names) -> list[str]:
    return (
        list(FIXED_COLUMNS)
        + [f"theta_{n}" for n in parameter_names]
        + [f"eps_{n}" for n in summary_names]
        + list(TAIL_COLUMNS)
    )


def write_trace(path: Path | str, result) -> None:
    """Persist a sampler result; floats carry 17 significant digits."""
    rows = trace_rows(result)
    header = header_for(result.parameter_names, result.summary_names)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [cell if isinstance(cell, (str, int)) else format_float(cell) for cell in row]
        )
    Path(path).write_text(buf.getvalue())


def read_trace(path: Path | str) -> TraceData:
    """Load a trace written by write_trace; inverse up to float identity."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        param_names = tuple(h[len("theta_"):] for h in header if h.startswith("theta_"))
        summary_names = tuple(h[len("eps_"):] for h in header if h.startswith("eps_"))
        d, k = len(param_names), len(summary_names)
        kinds, cos, idx, anc, thetas, errors, weights, accepted, cum = (
            [], [], [], [], [], [], [], [], [],
        )
        for row in reader:
            kinds.append(row[0])
            cos.append(int(row[1]))
            idx.append(int(row[2]))
            anc.append(int(row[3]))
            thetas.append([float(v) for v in row[4 : 4 + d]])
            errors.append([float(v) for v in row[4 + d : 4 + d + k]])
            weights.append(float(row[4 + d + k]))
            accepted.append(int(row[5 + d + k]))
            cum.append(int(row[6 + d + k]))
    return TraceData(
        kinds=kinds,
        chain_or_stage=np.array(cos, dtype=int),
        index=np.array(idx, dtype=int),
        ancestors=np.array(anc, dtype=int),
        thetas=np.array(thetas, dtype=float).reshape(len(kinds), d),
        errors=np.array(errors, dtype=float).reshape(len(kinds), k),
        weights=np.array(weights, dtype=float),
        accepted=np.array(accepted, dtype=int),
        cum_sims=np.array(cum, dtype=int),
        parameter_names=param_names,
        summary_names=summary_names,
    )
