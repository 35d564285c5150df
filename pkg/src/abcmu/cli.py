"""Command-line front end.

Subcommands: run <config>, plot <trace>, diagnose <trace>, validate
<config>. Exit codes: 0 success, 2 config error, 3 sampler budget error
(partial artifacts are kept and flagged), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ResolvedRun, load_config, resolve_run
from .core import CannotInitializeError
from .diagnostics import (
    DegenerateDataError,
    EssReport,
    error_density_ash2d,
    ess_sokal,
    ess_weights,
    expected_error,
    mh_performance,
    performance_report,
    sis_performance,
)
from .samplers import hybrid_abcmu, mh_multichain, rej_abc, rej_abcmu, sis_abcmu
from .trace import TraceData, read_trace, write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_IO = 4


class BudgetError(RuntimeError):
    """A sampler ran out of budget; partial artifacts were written."""


def _execute(run: ResolvedRun):
    kind = run.sampler_kind
    opts = run.sampler_options
    if kind == "rej":
        return rej_abc(
            run.model,
            run.prior,
            opts["tau"],
            int(opts.get("n_accept", 1000)),
            run.seed,
            max_sims=int(opts.get("max_sims", 10_000_000)),
        )
    if kind == "rej-mu":
        return rej_abcmu(
            run.model,
            run.prior,
            opts["tau_row"],
            int(opts.get("n_accept", 1000)),
            run.seed,
            max_sims=int(opts.get("max_sims", 10_000_000)),
        )
    if kind == "mh-mu":
        return mh_multichain(
            run.model,
            run.prior,
            run.proposal,
            run.schedule,
            int(opts.get("n_iter", 10_000)),
            int(opts.get("chains", 4)),
            run.seed,
            stop_after_post=opts.get("stop_after_post"),
            workers=run.workers,
        )
    if kind == "sis-mu":
        return sis_abcmu(
            run.model,
            run.prior,
            run.proposal,
            run.schedule,
            int(opts.get("n_particles", 1000)),
            run.seed,
            max_attempts_per_particle=int(opts.get("max_attempts_per_particle", 10_000)),
            workers=run.workers,
        )
    # hybrid-mu
    return hybrid_abcmu(
        run.model,
        run.prior,
        run.proposal,
        run.schedule,
        run.seed,
        n_chains=int(opts.get("chains", 4)),
        post_burn_in_iterations=int(opts.get("post_burn_in", 500)),
        thin=int(opts.get("thin", 20)),
        n_seed=int(opts.get("n_seed", 100)),
        n_particles=int(opts.get("n_particles", 1000)),
        n_sis_stages=int(opts.get("sis_stages", 2)),
        max_chain_iterations=int(opts.get("max_chain_iterations", 100_000)),
        workers=run.workers,
    )


def _status_of(result) -> str:
    from .samplers import HybridResult, MultiChainResult, RejectionResult, SisResult

    if isinstance(result, RejectionResult) and not result.complete:
        return "budget-exhausted"
    if isinstance(result, SisResult) and result.stalled:
        return "stage-stalled"
    if isinstance(result, HybridResult) and result.sis.stalled:
        return "stage-stalled"
    if isinstance(result, MultiChainResult) and result.failures:
        return "chains-failed" if not result.completed else "ok"
    return "ok"


def _report_lines(kind: str, result) -> list[str]:
    from .samplers import HybridResult, MultiChainResult, RejectionResult, SisResult

    lines = []
    if isinstance(result, RejectionResult):
        if result.n_accepted == 0:
            raise BudgetError("no acceptances within the simulation budget")
        ess = ess_weights(np.full(result.n_accepted, 1.0 / result.n_accepted))
        rep = performance_report(0, ess, result.n_sims, result.n_accepted)
    elif isinstance(result, MultiChainResult):
        rep = mh_performance(result)
    elif isinstance(result, SisResult):
        rep = sis_performance(result)
    elif isinstance(result, HybridResult):
        rep = result.report
    else:
        raise TypeError(type(result).__name__)
    lines.append(f"{'sampler':<12}{'burn-in':>12}{'ESS/1000':>12}{'#sim/ESS':>12}")
    lines.append(
        f"{kind:<12}{rep.burn_in:>12d}{rep.ess_per_1000:>12.1f}{rep.sims_per_ess:>12.1f}"
    )
    lines.append("")
    lines.append(f"ESS = {rep.ess:.2f} over {rep.n_post_burn_in} post-burn-in samples")
    lines.append(f"total simulations = {rep.total_sims}")
    return lines


def _counters_of(result) -> dict:
    from .samplers import HybridResult, MultiChainResult, RejectionResult, SisResult

    if isinstance(result, RejectionResult):
        return {"n_sims": result.n_sims, "n_accepted": result.n_accepted, "complete": result.complete}
    if isinstance(result, MultiChainResult):
        return {"n_sims": result.n_sims, "burn_in": result.burn_in_report(), "failures": result.failures}
    if isinstance(result, SisResult):
        return {
            "n_sims": result.n_sims,
            "stalled_stage": result.stalled_stage,
            "stage_sims": [s.n_sims for s in result.stages],
        }
    if isinstance(result, HybridResult):
        return {
            "n_sims": result.n_sims,
            "mh_sims": result.mh.n_sims,
            "stage_sims": [s.n_sims for s in result.sis.stages],
        }
    return {}


def _density_rows(trace: TraceData) -> tuple[np.ndarray, np.ndarray]:
    """Rows of a trace representing the final target density.

    Final-stage particles when present, otherwise every recorded row (the
    trace format does not distinguish burn-in iterations; the run command
    uses the richer in-memory result for its own diagnostics).
    """
    kinds = np.array(trace.kinds)
    if "sis" in kinds:
        mask = kinds == "sis"
        last = trace.chain_or_stage[mask].max()
        sel = mask & (trace.chain_or_stage == last)
    else:
        sel = np.ones(len(trace.kinds), dtype=bool)
    w = trace.weights[sel]
    return trace.errors[sel], w / w.sum()


def _result_density(result) -> tuple[np.ndarray, np.ndarray]:
    """Post-burn-in errors and normalized weights straight from a result."""
    from .samplers import HybridResult, MultiChainResult, RejectionResult, SisResult

    if isinstance(result, RejectionResult):
        errors = result.errors if result.errors.ndim == 2 else result.errors[:, None]
        n = errors.shape[0]
        return errors, np.full(n, 1.0 / n)
    if isinstance(result, MultiChainResult):
        _, errors = result.pooled_post_burn_in()
        n = errors.shape[0]
        return errors, np.full(n, 1.0 / n)
    if isinstance(result, (SisResult, HybridResult)):
        system = result.system
        return system.errors, system.W
    raise TypeError(type(result).__name__)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out_dir is not None:
        cfg["output_dir"] = args.out_dir
    run = resolve_run(cfg, Path(args.config).parent)
    out = run.output_dir
    out.mkdir(parents=True, exist_ok=True)

    try:
        result = _execute(run)
    except CannotInitializeError as e:
        print(f"sampler failed to initialize: {e}", file=sys.stderr)
        return EXIT_BUDGET

    status = _status_of(result)
    write_trace(out / "trace.csv", result)
    metadata = {
        "config": run.resolved,
        "versions": {
            "abcmu": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "counters": _counters_of(result),
        "status": status,
    }
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")

    try:
        report = _report_lines(run.sampler_kind, result)
    except (BudgetError, ValueError) as e:
        report = [f"diagnostics unavailable: {e}"]
    errors, weights = _result_density(result)
    if errors.shape[0] > 0:
        report.append("")
        exp = expected_error(errors, weights)
        report.append(
            "expected error: "
            + ", ".join(f"{n}={v:.4g}" for n, v in zip(run.model.summary_names, exp))
        )
    (out / "diagnostics.txt").write_text("\n".join(report) + "\n")

    for k1, k2 in run.plots:
        i1 = run.model.summary_names.index(k1)
        i2 = run.model.summary_names.index(k2)
        try:
            grid = error_density_ash2d(
                errors, i1, i2, weights=weights, **run.ash_options
            )
        except DegenerateDataError as e:
            print(f"ash {k1},{k2}: {e}", file=sys.stderr)
            continue
        (out / f"ash_{k1}_{k2}.txt").write_text(grid.to_text())

    if status != "ok":
        print(f"run finished with status {status}; partial artifacts in {out}", file=sys.stderr)
        return EXIT_BUDGET
    print(f"artifacts written to {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    trace = read_trace(args.trace)
    names = trace.summary_names
    pair = args.pair.split(",")
    if len(pair) != 2:
        print("--pair needs two comma-separated summary names", file=sys.stderr)
        return EXIT_CONFIG
    for p in pair:
        if p not in names:
            print(f"unknown summary {p!r}; valid: {', '.join(names)}", file=sys.stderr)
            return EXIT_CONFIG
    k1, k2 = names.index(pair[0]), names.index(pair[1])
    errors, weights = _density_rows(trace)
    try:
        grid = error_density_ash2d(
            errors, k1, k2, n_bins=args.bins, m_shifts=args.shifts, weights=weights
        )
    except DegenerateDataError as e:
        print(f"degenerate data: {e}", file=sys.stderr)
        return EXIT_CONFIG

    fig, ax = plt.subplots(figsize=(5, 4.2))
    mesh = ax.pcolormesh(grid.x_edges, grid.y_edges, grid.density.T, cmap="viridis")
    ax.axhline(0.0, color="white", lw=0.8, ls="--", alpha=0.8)
    ax.axvline(0.0, color="white", lw=0.8, ls="--", alpha=0.8)
    ax.plot([0.0], [0.0], marker="o", ms=5, mfc="none", mec="white")
    ax.set_xlabel(f"eps_{pair[0]}")
    ax.set_ylabel(f"eps_{pair[1]}")
    fig.colorbar(mesh, ax=ax, label="density")
    fig.tight_layout()
    fig.savefig(args.out, format="svg")
    plt.close(fig)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    trace = read_trace(args.trace)
    kinds = np.array(trace.kinds)
    lines = [f"trace: {args.trace} ({len(trace)} records)"]
    if "sis" in kinds:
        mask = kinds == "sis"
        last = trace.chain_or_stage[mask].max()
        sel = mask & (trace.chain_or_stage == last)
        w = trace.weights[sel]
        rep = performance_report(
            burn_in=int(trace.cum_sims[~sel].max(initial=0)),
            ess_report=ess_weights(w / w.sum()),
            total_sims=int(trace.cum_sims[sel].max()),
            n_post_burn_in=int(sel.sum()),
        )
        kind = "sis-mu" if "mh" not in kinds else "hybrid-mu"
    elif "mh" in kinds:
        # the trace does not mark burn-in, so the report covers all recorded
        # iterations; run-time diagnostics (diagnostics.txt) are authoritative
        ess_total = None
        n_post = 0
        for c in np.unique(trace.chain_or_stage[kinds == "mh"]):
            sel = (kinds == "mh") & (trace.chain_or_stage == c)
            th = trace.thetas[sel]
            n_post += th.shape[0]
            per_comp = [
                ess_sokal(th[:, k]).ess if th.shape[0] >= 10 else 1.0
                for k in range(th.shape[1])
            ]
            arr = np.array(per_comp)
            ess_total = arr if ess_total is None else ess_total + arr
        ess_rep = EssReport(
            "sokal_autocorrelation", float(min(ess_total.min(), n_post)), n_post
        )
        rep = performance_report(
            burn_in=0,
            ess_report=ess_rep,
            total_sims=int(trace.cum_sims.max()),
            n_post_burn_in=n_post,
        )
        kind = "mh-mu"
    else:
        sel = np.ones(len(trace), dtype=bool)
        n = int(sel.sum())
        rep = performance_report(
            burn_in=0,
            ess_report=ess_weights(np.full(n, 1.0 / n)),
            total_sims=int(trace.cum_sims.max()),
            n_post_burn_in=n,
        )
        kind = "rej"
    lines.append(f"{'sampler':<12}{'burn-in':>12}{'ESS/1000':>12}{'#sim/ESS':>12}")
    lines.append(f"{kind:<12}{rep.burn_in:>12d}{rep.ess_per_1000:>12.1f}{rep.sims_per_ess:>12.1f}")
    errors, weights = _density_rows(trace)
    exp = expected_error(errors, weights)
    lines.append(
        "expected error: " + ", ".join(f"{n}={v:.4g}" for n, v in zip(trace.summary_names, exp))
    )
    print("\n".join(lines))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    resolve_run(cfg, Path(args.config).parent)
    print(f"{args.config}: valid")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="abcmu", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured sampler run")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out-dir", default=None)
    p_run.set_defaults(fn=cmd_run)

    p_plot = sub.add_parser("plot", help="render an error-density heatmap from a trace")
    p_plot.add_argument("trace")
    p_plot.add_argument("--pair", required=True, help="two summary names, comma separated")
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--bins", type=int, default=30)
    p_plot.add_argument("--shifts", type=int, default=4)
    p_plot.set_defaults(fn=cmd_plot)

    p_diag = sub.add_parser("diagnose", help="recompute diagnostics from a trace")
    p_diag.add_argument("trace")
    p_diag.set_defaults(fn=cmd_diagnose)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")
    p_val.set_defaults(fn=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
