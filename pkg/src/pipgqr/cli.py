"""Command-line interface.

Verbs:
  generate      build a benchmark problem and write it as JSON
  solve         run the solver on a problem JSON
  precondition  apply the QR preconditioner and report diagnostics
  bench         run the 2x2 configuration matrix, emit tables + figures
  project       project a point onto a single set (debug utility)

Exit codes: 0 success, 2 usage error, 3 solver divergence, 4 oracle failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import mpc
from .oracle import OracleFailure, splitting_reference_solve
from .precond import qr_precondition, verify_orthogonality
from .problem import (
    _set_from_json,
    load_problem,
    save_problem,
    spectral_estimates,
)
from .solver import DivergenceError, SolverConfig, pipg_run

EXIT_USAGE = 2
EXIT_DIVERGENCE = 3
EXIT_ORACLE = 4


def _default_seed():
    return int(os.environ.get("PIPGQR_SEED", "0"))


def _vector_arg(text):
    return np.array([float(x) for x in text.split(",")])


def _add_generate(sub):
    p = sub.add_parser("generate", help="generate a benchmark problem JSON")
    p.add_argument("--problem", required=True,
                   choices=["mass_spring", "quadrotor"])
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="seed for the mass-spring initial state")
    p.add_argument("--horizon", type=int, default=None, dest="T")
    p.add_argument("--dt", type=float, default=None)
    # mass-spring
    p.add_argument("--masses", type=int, default=None, dest="N")
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--u-max", type=float, default=None)
    p.add_argument("--x-init", type=_vector_arg, default=None)
    # quadrotor
    p.add_argument("--mass", type=float, default=None)
    p.add_argument("--psi", type=float, default=None)
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--obstacle-center", type=_vector_arg, default=None)
    p.add_argument("--obstacle-radius", type=float, default=None)
    p.add_argument("--theta-max", type=float, default=None)
    p.add_argument("--grav", type=float, default=None)
    p.add_argument("--x-target", type=_vector_arg, default=None)
    # shared weights / bounds
    p.add_argument("--v-max", type=float, default=None)
    p.add_argument("--q-pos", type=float, default=None)
    p.add_argument("--q-vel", type=float, default=None)
    p.add_argument("--r-ctrl", type=float, default=None)


def _collect(args, mapping):
    out = {}
    for arg_name, field in mapping.items():
        val = getattr(args, arg_name)
        if val is not None:
            out[field] = val
    return out


def cmd_generate(args):
    if args.problem == "mass_spring":
        kw = _collect(args, {
            "T": "T", "dt": "dt", "N": "N", "r_max": "r_max",
            "v_max": "v_max", "u_max": "u_max", "q_pos": "q_pos",
            "q_vel": "q_vel", "r_ctrl": "r_ctrl", "x_init": "x_init",
        })
        if "x_init" not in kw:
            seed = args.seed if args.seed is not None else _default_seed()
            kw["x_init"] = mpc.sample_initial_state(seed, kw.get("N", 8))
        prob = mpc.build_mass_spring(mpc.MassSpringParams(**kw))
    else:
        kw = _collect(args, {
            "T": "T", "dt": "dt", "mass": "mass", "psi": "psi", "phi": "phi",
            "obstacle_center": "r_c", "obstacle_radius": "rho",
            "v_max": "v_max", "u_max": "u_max", "theta_max": "theta_max",
            "grav": "grav", "q_pos": "q_pos", "q_vel": "q_vel",
            "r_ctrl": "r_ctrl", "x_init": "x_init", "x_target": "x_target",
        })
        prob = mpc.build_quadrotor(mpc.QuadrotorParams(**kw))
    save_problem(prob, args.output)
    print(f"wrote {args.output} (n={prob.n}, m={prob.m})")
    return 0


def _add_solve(sub):
    p = sub.add_parser("solve", help="solve a problem JSON with PIPG")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None, help="result JSON path")
    p.add_argument("--precondition", action="store_true")
    p.add_argument("--step-selection", action="store_true")
    p.add_argument("--k-max", type=int, default=50_000)
    p.add_argument("--k-update", type=int, default=25)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--gamma", type=float, default=None,
                   help="initial gamma (default: sigma, dual step = 1)")
    p.add_argument("--history-stride", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reference", default=None,
                   help="JSON file with a reference solution vector, or "
                        "'oracle' to compute one")


def cmd_solve(args):
    prob = load_problem(args.input)
    ref = None
    if args.reference == "oracle":
        ref = splitting_reference_solve(prob)
    elif args.reference is not None:
        with open(args.reference) as f:
            ref = np.array(json.load(f), dtype=float)
    cfg = SolverConfig(
        k_max=args.k_max, k_update=args.k_update, tol_opt=args.tol,
        gamma_init=args.gamma, use_precondition=args.precondition,
        use_step_selection=args.step_selection,
        history_stride=args.history_stride, reference_solution=ref,
    )
    seed = args.seed if args.seed is not None else _default_seed()
    result = pipg_run(prob, cfg, seed=seed)
    print(f"status={result.status} iterations={result.iterations} "
          f"solve={result.solve_time * 1e3:.2f}ms "
          f"precondition={result.precondition_time * 1e3:.2f}ms")
    if args.output:
        with open(args.output, "w") as f:
            json.dump(result.to_dict(), f)
        print(f"wrote {args.output}")
    return 0


def _add_precondition(sub):
    p = sub.add_parser("precondition",
                       help="apply the QR preconditioner to a problem JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None,
                   help="write (eta, H_hat, g_hat) as JSON")


def cmd_precondition(args):
    prob = load_problem(args.input)
    s = spectral_estimates(prob)
    pp = qr_precondition(prob, s)
    defect = verify_orthogonality(pp)
    print(f"eta={pp.eta:.6g} orthogonality_defect={defect:.3e} "
          f"time={pp.elapsed * 1e3:.2f}ms")
    if args.output:
        with open(args.output, "w") as f:
            json.dump({"eta": pp.eta, "H_hat": pp.H_hat.tolist(),
                       "g_hat": pp.g_hat.tolist(),
                       "precondition_time_ms": pp.elapsed * 1e3}, f)
        print(f"wrote {args.output}")
    return 0


def _add_bench(sub):
    p = sub.add_parser("bench", help="run the benchmark experiment matrix")
    p.add_argument("--problem", default="mass_spring",
                   help="mass_spring, quadrotor, or a problem JSON path")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--configs", default="plain,qr,step,qr+step")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k-max", type=int, default=50_000)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--k-update", type=int, default=25)
    p.add_argument("--history-stride", type=int, default=100)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--timing-strict", action="store_true",
                   help="pin cells to sequential execution (cells already "
                        "run sequentially; accepted for compatibility)")


def cmd_bench(args):
    seed = args.seed if args.seed is not None else _default_seed()
    spec = bench_mod.ExperimentSpec(
        problem=args.problem,
        configurations=tuple(args.configs.split(",")),
        runs=args.runs, seed=seed, k_max=args.k_max, tol=args.tol,
        k_update=args.k_update, history_stride=args.history_stride,
    )

    def progress(run_idx, cfg_name, result):
        print(f"run {run_idx} {cfg_name}: {result.status} "
              f"in {result.iterations} iterations", file=sys.stderr)

    report = bench_mod.run_experiment(spec, progress=progress)
    if not report.records:
        raise OracleFailure("all runs were excluded by oracle failures")

    os.makedirs(args.output_dir, exist_ok=True)
    outputs = {
        "report.csv": bench_mod.emit_report(report, "csv"),
        "history.csv": bench_mod.emit_history_csv(report),
        "report.json": bench_mod.emit_report(report, "json"),
        "report.md": bench_mod.emit_report(report, "markdown"),
    }
    for name, text in outputs.items():
        path = os.path.join(args.output_dir, name)
        with open(path, "w") as f:
            f.write(text)
    if not args.no_figures:
        bench_mod.render_figures(report, args.output_dir)
    if report.invalid_runs:
        print(f"warning: {report.invalid_runs} run(s) excluded "
              f"(oracle failure)", file=sys.stderr)
    print(bench_mod.emit_report(report, "markdown"))
    print(f"wrote {args.output_dir}/")
    return 0


def _add_project(sub):
    p = sub.add_parser("project",
                       help="project a point onto a single set (debugging)")
    p.add_argument("--set", required=True,
                   help='set descriptor JSON, e.g. \'{"type": "ball", '
                        '"params": {"radius": 1, "center": [0, 0]}}\'')
    p.add_argument("--point", required=True, type=_vector_arg,
                   help="comma-separated coordinates")


def cmd_project(args):
    descriptor = json.loads(args.set)
    s = _set_from_json(descriptor)
    out = s.project(args.point)
    print(",".join(f"{x:.17g}" for x in out))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pipgqr",
        description="PIPG conic solver with QR preconditioning and "
                    "adaptive step sizes",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate(sub)
    _add_solve(sub)
    _add_precondition(sub)
    _add_bench(sub)
    _add_project(sub)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "solve": cmd_solve,
        "precondition": cmd_precondition,
        "bench": cmd_bench,
        "project": cmd_project,
    }
    try:
        return handlers[args.command](args)
    except DivergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OracleFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ORACLE
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
