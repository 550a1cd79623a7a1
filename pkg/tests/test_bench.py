"""Tests for the benchmark harness and its report emitters."""

import json

import numpy as np
import pytest

from pipgqr import bench, mpc
from pipgqr.oracle import splitting_reference_solve
from pipgqr.problem import save_problem
from pipgqr.solver import SolverConfig, pipg_run


@pytest.fixture(scope="module")
def tiny_problem_path(tmp_path_factory):
    """A small oscillating-mass instance saved as JSON."""
    p = mpc.MassSpringParams(T=5, N=2,
                             x_init=mpc.sample_initial_state(7, 2))
    prob = mpc.build_mass_spring(p)
    path = tmp_path_factory.mktemp("bench") / "tiny.json"
    save_problem(prob, path)
    return str(path), prob


@pytest.fixture(scope="module")
def tiny_report(tiny_problem_path):
    path, _ = tiny_problem_path
    spec = bench.ExperimentSpec(problem=path, k_max=20_000,
                                history_stride=50, seed=7)
    return bench.run_experiment(spec)


class TestExperimentSpec:
    def test_default_runs(self):
        assert bench.ExperimentSpec(problem="mass_spring").runs == 50
        assert bench.ExperimentSpec(problem="quadrotor").runs == 1

    def test_rejects_unknown_config(self):
        with pytest.raises(ValueError):
            bench.ExperimentSpec(configurations=("plain", "turbo"))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            bench.ExperimentSpec(configurations=())


class TestRunExperiment:
    def test_matrix_filled(self, tiny_report):
        assert len(tiny_report.records) == 4
        assert tiny_report.configs() == ["plain", "qr", "step", "qr+step"]
        assert tiny_report.invalid_runs == 0
        assert all(r.status == "converged" for r in tiny_report.records)

    def test_plain_cell_matches_direct_run(self, tiny_problem_path,
                                           tiny_report):
        _, prob = tiny_problem_path
        z_star = splitting_reference_solve(prob, tol=1e-9)
        cfg = SolverConfig(k_max=20_000, tol_opt=1e-4, history_stride=50,
                           reference_solution=z_star)
        res = pipg_run(prob, cfg, seed=7)
        rec = next(r for r in tiny_report.records if r.config == "plain")
        assert rec.iterations == res.iterations
        assert rec.history == [tuple(h) for h in res.history]

    def test_deterministic(self, tiny_problem_path, tiny_report):
        path, _ = tiny_problem_path
        spec = bench.ExperimentSpec(problem=path, k_max=20_000,
                                    history_stride=50, seed=7)
        again = bench.run_experiment(spec)
        assert [r.iterations for r in again.records] == \
            [r.iterations for r in tiny_report.records]

    def test_aggregate(self, tiny_report):
        agg = tiny_report.aggregate()
        for cfg in ("plain", "qr", "step", "qr+step"):
            a = agg[cfg]
            assert a["runs"] == 1 and a["converged"] == 1
            assert a["min_iterations"] == a["max_iterations"]
            assert a["mean_iterations"] == a["min_iterations"]


class TestEmitters:
    def test_csv(self, tiny_report):
        text = bench.emit_report(tiny_report, "csv")
        lines = text.strip().splitlines()
        assert lines[0] == "config,run,iterations,solve_ms,precond_ms"
        assert len(lines) == 5

    def test_history_csv(self, tiny_report):
        text = bench.emit_history_csv(tiny_report)
        lines = text.strip().splitlines()
        assert lines[0] == "config,run,k,error_opt,error_feas,gamma"
        assert len(lines) > 1

    def test_history_csv_header_only(self):
        spec = bench.ExperimentSpec(problem="quadrotor")
        empty = bench.BenchmarkReport(problem="quadrotor", spec=spec)
        assert bench.emit_history_csv(empty).strip() == \
            "config,run,k,error_opt,error_feas,gamma"

    def test_markdown_table(self, tiny_report):
        text = bench.emit_report(tiny_report, "markdown")
        assert "| Without Step Select. |" in text
        assert "| With Step Select.    |" in text
        assert "iters" in text and "ms" in text

    def test_json_roundtrip(self, tiny_report):
        text = bench.emit_report(tiny_report, "json")
        back = bench.report_from_dict(json.loads(text))
        assert back.problem == tiny_report.problem
        assert back.invalid_runs == tiny_report.invalid_runs
        assert len(back.records) == len(tiny_report.records)
        for a, b in zip(back.records, tiny_report.records):
            assert a.config == b.config and a.iterations == b.iterations
            np.testing.assert_allclose(
                np.array(a.history, dtype=float),
                np.array(b.history, dtype=float), rtol=1e-12)

    def test_unknown_format(self, tiny_report):
        with pytest.raises(ValueError):
            bench.emit_report(tiny_report, "xml")


class TestFigures:
    def test_files_written(self, tiny_report, tmp_path):
        written = bench.render_figures(tiny_report, tmp_path)
        names = sorted(p.name for p in written)
        assert names == ["error_feas.png", "error_opt.png"]
        for p in written:
            assert p.stat().st_size > 0
