"""Benchmark harness: run the 2x2 configuration matrix (preconditioning
on/off x adaptive step sizes on/off) over seeded problem instances and
emit comparison tables, convergence-history data, and figures.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import mpc
from .oracle import OracleFailure, splitting_reference_solve
from .problem import load_problem
from .solver import SolverConfig, pipg_run

CONFIGURATIONS = {
    "plain": (False, False),
    "qr": (True, False),
    "step": (False, True),
    "qr+step": (True, True),
}


@dataclass
class ExperimentSpec:
    problem: str = "mass_spring"  # "mass_spring" | "quadrotor" | a JSON path
    configurations: tuple = ("plain", "qr", "step", "qr+step")
    runs: int = None  # default: 50 for mass_spring, 1 otherwise
    seed: int = 0
    k_max: int = 50_000
    tol: float = 1e-4
    k_update: int = 25
    history_stride: int = 100
    oracle_tol: float = 1e-9

    def __post_init__(self):
        if not self.configurations:
            raise ValueError("configuration set must be non-empty")
        for c in self.configurations:
            if c not in CONFIGURATIONS:
                raise ValueError(f"unknown configuration {c!r}")
        if self.runs is None:
            self.runs = 50 if self.problem == "mass_spring" else 1
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@dataclass
class RunRecord:
    config: str
    run: int
    seed: int
    iterations: int
    status: str
    solve_ms: float
    precond_ms: float
    history: list  # (k, error_opt, error_feas, gamma)


@dataclass
class BenchmarkReport:
    problem: str
    spec: ExperimentSpec
    records: list = field(default_factory=list)
    invalid_runs: int = 0

    def configs(self):
        seen = []
        for r in self.records:
            if r.config not in seen:
                seen.append(r.config)
        return seen

    def aggregate(self):
        """Per-configuration iteration and timing statistics."""
        out = {}
        for cfg in self.configs():
            rs = [r for r in self.records if r.config == cfg]
            iters = np.array([r.iterations for r in rs])
            out[cfg] = {
                "runs": len(rs),
                "mean_iterations": float(iters.mean()),
                "min_iterations": int(iters.min()),
                "max_iterations": int(iters.max()),
                "mean_solve_ms": float(np.mean([r.solve_ms for r in rs])),
                "min_solve_ms": float(np.min([r.solve_ms for r in rs])),
                "mean_precond_ms": float(np.mean([r.precond_ms for r in rs])),
                "converged": int(sum(r.status == "converged" for r in rs)),
            }
        return out


def _build_instance(spec, run_idx):
    if spec.problem == "mass_spring":
        seed = spec.seed + run_idx
        x_init = mpc.sample_initial_state(seed, 8)
        return mpc.build_mass_spring(mpc.MassSpringParams(x_init=x_init)), seed
    if spec.problem == "quadrotor":
        return mpc.build_quadrotor(), spec.seed
    return load_problem(spec.problem), spec.seed


def run_experiment(spec, progress=None):
    """Run every (configuration, run) cell of the experiment matrix.

    The reference solution is computed once per run and shared by all
    configurations so their error histories are comparable. Runs whose
    oracle fails are excluded and counted in invalid_runs.
    """
    report = BenchmarkReport(problem=spec.problem, spec=spec)
    for run_idx in range(spec.runs):
        prob, seed = _build_instance(spec, run_idx)
        try:
            z_star = splitting_reference_solve(prob, tol=spec.oracle_tol)
        except OracleFailure:
            report.invalid_runs += 1
            continue
        for cfg_name in spec.configurations:
            use_pre, use_step = CONFIGURATIONS[cfg_name]
            cfg = SolverConfig(
                k_max=spec.k_max,
                k_update=spec.k_update,
                tol_opt=spec.tol,
                use_precondition=use_pre,
                use_step_selection=use_step,
                history_stride=spec.history_stride,
                reference_solution=z_star,
            )
            result = pipg_run(prob, cfg, seed=seed)
            report.records.append(RunRecord(
                config=cfg_name,
                run=run_idx,
                seed=seed,
                iterations=result.iterations,
                status=result.status,
                solve_ms=result.solve_time * 1e3,
                precond_ms=result.precondition_time * 1e3,
                history=[tuple(h) for h in result.history],
            ))
            if progress is not None:
                progress(run_idx, cfg_name, result)
    return report


def emit_report(report, fmt):
    """Render a report as csv, json, or a markdown comparison table."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["config", "run", "iterations", "solve_ms", "precond_ms"])
        for r in report.records:
            w.writerow([r.config, r.run, r.iterations,
                        f"{r.solve_ms:.3f}", f"{r.precond_ms:.3f}"])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2)
    if fmt == "markdown":
        agg = report.aggregate()

        def cell(cfg):
            if cfg not in agg:
                return "-"
            a = agg[cfg]
            return f"{a['mean_iterations']:.1f} iters / {a['mean_solve_ms']:.2f} ms"

        lines = [
            f"### {report.problem} (mean over {report.spec.runs} runs)",
            "",
            "|                      | Without Precond. | With QR |",
            "|----------------------|------------------|---------|",
            f"| Without Step Select. | {cell('plain')} | {cell('qr')} |",
            f"| With Step Select.    | {cell('step')} | {cell('qr+step')} |",
        ]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unsupported report format {fmt!r}")


def emit_history_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["config", "run", "k", "error_opt", "error_feas", "gamma"])
    for r in report.records:
        for k, e_opt, e_feas, gamma in r.history:
            w.writerow([r.config, r.run, k, f"{e_opt:.6e}",
                        f"{e_feas:.6e}", f"{gamma:.6e}"])
    return buf.getvalue()


def report_to_dict(report):
    return {
        "problem": report.problem,
        "spec": asdict(report.spec),
        "invalid_runs": report.invalid_runs,
        "aggregate": report.aggregate(),
        "records": [asdict(r) for r in report.records],
    }


def report_from_dict(d):
    spec_d = dict(d["spec"])
    spec_d["configurations"] = tuple(spec_d["configurations"])
    spec = ExperimentSpec(**spec_d)
    report = BenchmarkReport(problem=d["problem"], spec=spec,
                             invalid_runs=d["invalid_runs"])
    for rd in d["records"]:
        rd = dict(rd)
        rd["history"] = [tuple(h) for h in rd["history"]]
        report.records.append(RunRecord(**rd))
    return report


def render_figures(report, outdir, run=0):
    """Write convergence-curve figures (error_opt and error_feas vs
    iteration, log scale) for one run of each configuration."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for idx, label in [(1, "error_opt"), (2, "error_feas")]:
        fig, ax = plt.subplots(figsize=(6, 4))
        for cfg in report.configs():
            recs = [r for r in report.records if r.config == cfg and r.run == run]
            if not recs:
                continue
            hist = recs[0].history
            ks = [h[0] for h in hist]
            vals = [h[idx] for h in hist]
            if not any(np.isfinite(vals)):
                continue
            ax.semilogy(ks, vals, label=cfg)
        ax.set_xlabel("iteration")
        ax.set_ylabel(label)
        ax.set_title(f"{report.problem}: {label}")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        path = outdir / f"{label}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written
