"""Acceptance gate: one test per release criterion, each printing a
single PASS/FAIL line on the terminal.

The two benchmark families are solved once per session (all four solver
configurations against a shared ADMM reference) and reused by the
criteria that inspect iteration counts, applied step sizes, and solution
agreement.
"""

import math

import numpy as np
import pytest

from pipgqr import mpc
from pipgqr import projections as prj
from pipgqr.oracle import (
    OracleFailure,
    dykstra_project,
    kkt_direct_solve,
    splitting_reference_solve,
)
from pipgqr.precond import qr_precondition, verify_orthogonality
from pipgqr.problem import (
    CanonicalProblem,
    SpectralData,
    kkt_condition_bound,
    optimal_singular_value,
    spectral_estimates,
)
from pipgqr.solver import SolverConfig, gap_bound_surrogate, pipg_run

CONFIGS = {
    "plain": (False, False),
    "qr": (True, False),
    "step": (False, True),
    "qr+step": (True, True),
}

MASS_RUNS = 50
K_MAX = 50_000
TOL = 1e-4


def _verdict(capsys, idx, label, ok, detail=""):
    with capsys.disabled():
        print(f"ACCEPTANCE {idx} ({label}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {idx} ({label}) failed: {detail}"


def _run_matrix(prob, z_star):
    out = {}
    for name, (use_pre, use_step) in CONFIGS.items():
        cfg = SolverConfig(k_max=K_MAX, tol_opt=TOL,
                           use_precondition=use_pre,
                           use_step_selection=use_step,
                           history_stride=1000,
                           reference_solution=z_star)
        out[name] = pipg_run(prob, cfg)
    return out


@pytest.fixture(scope="session")
def mass_family():
    """50 seeded oscillating-mass runs; H and P are shared, only the
    initial state (hence g) varies.

    A small fraction of random initial states cannot be kept inside the
    state and control boxes at all (the instance is infeasible and the
    reference oracle correctly refuses); those seeds are skipped and the
    seed sequence extended until 50 feasible runs are collected.
    """
    problems, results = [], []
    run = 0
    while len(results) < MASS_RUNS:
        p = mpc.MassSpringParams(x_init=mpc.sample_initial_state(run, 8))
        prob = mpc.build_mass_spring(p)
        run += 1
        try:
            z_star = splitting_reference_solve(prob, tol=1e-9,
                                               max_iters=40_000)
        except OracleFailure:
            continue
        problems.append(prob)
        results.append(_run_matrix(prob, z_star))
    s = spectral_estimates(problems[0])
    pp = qr_precondition(problems[0], s)
    return {"problems": problems, "results": results, "s": s, "pp": pp}


@pytest.fixture(scope="session")
def quad_family():
    prob = mpc.build_quadrotor()
    z_star = splitting_reference_solve(prob, tol=1e-9)
    s = spectral_estimates(prob)
    pp = qr_precondition(prob, s)
    return {"problems": [prob], "results": [_run_matrix(prob, z_star)],
            "s": s, "pp": pp}


def _iters(family, cfg):
    return np.array([r[cfg].iterations for r in family["results"]])


class TestAcceptance:
    def test_criterion_01_orthogonality(self, mass_family, quad_family,
                                        capsys):
        worst_defect = 0.0
        worst_sv = 0.0
        for fam in (mass_family, quad_family):
            pp = fam["pp"]
            worst_defect = max(worst_defect,
                               verify_orthogonality(pp) / pp.eta**2)
            sv = np.linalg.svd(np.asarray(pp.H_hat), compute_uv=False)
            worst_sv = max(worst_sv, np.max(np.abs(sv - pp.eta)) / pp.eta)
        ok = worst_defect <= 1e-9 and worst_sv <= 1e-8
        _verdict(capsys, 1, "preconditioner orthogonality", ok,
                 f"defect={worst_defect:.3e} sv_rel={worst_sv:.3e}")

    def test_criterion_02_condition_bound(self, mass_family, quad_family,
                                          capsys):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(100):
            lam_min = rng.uniform(0.01, 5.0)
            lam_max = lam_min * rng.uniform(1.0, 50.0)
            sv = optimal_singular_value(lam_max, lam_min)
            root = np.sqrt(lam_max**2 + 4 * sv**2)
            first = (lam_max + root) / (root - lam_max)
            second = (lam_max + root) / (2 * lam_min)
            worst = max(worst, abs(first - second) / second)
        equalized = worst <= 1e-10

        improved = True
        for fam in (mass_family, quad_family):
            prob = fam["problems"][0]
            s = spectral_estimates(prob, want_sigma_min=True)
            eta2 = fam["pp"].eta**2
            s_pre = SpectralData(s.lambda_max, s.lambda_min, eta2,
                                 sigma_min_sq=eta2)
            improved &= (kkt_condition_bound(s_pre)
                         <= kkt_condition_bound(s) + 1e-9)
        ok = equalized and improved
        _verdict(capsys, 2, "condition-number bound", ok,
                 f"equalization={worst:.3e} improved={improved}")

    def test_criterion_03_solver_correctness(self, capsys):
        rng = np.random.default_rng(42)
        worst_set = 0.0
        for _ in range(50):
            n = int(rng.integers(5, 41))
            m = int(rng.integers(1, min(21, n)))
            sets, covered = [], 0
            while covered < n:
                d = int(min(rng.integers(1, 5), n - covered))
                if rng.integers(2):
                    lo = rng.uniform(-2.0, 0.0, d)
                    sets.append(prj.Box(lo, lo + rng.uniform(0.5, 3.0, d)))
                else:
                    sets.append(prj.Ball(rng.uniform(0.5, 3.0),
                                         rng.standard_normal(d) * 0.3))
                covered += d
            D = prj.ProductSet.from_sets(sets)
            H = rng.standard_normal((m, n))
            z0 = D.project(rng.standard_normal(n) * 0.3)
            prob = CanonicalProblem(P=rng.uniform(0.5, 4.0, n),
                                    q=rng.standard_normal(n),
                                    H=H, g=H @ z0, D=D)
            z_ref = splitting_reference_solve(prob, tol=1e-9)
            cfg = SolverConfig(k_max=200_000, tol_opt=1e-6,
                               use_precondition=True,
                               use_step_selection=True,
                               history_stride=10_000)
            res = pipg_run(prob, cfg)
            scale = max(np.max(np.abs(z_ref)), 1e-12)
            worst_set = max(worst_set,
                            np.max(np.abs(res.z_final - z_ref)) / scale)

        worst_eq = 0.0
        for _ in range(50):
            n = int(rng.integers(3, 31))
            m = int(rng.integers(1, n))
            prob = CanonicalProblem(P=rng.uniform(0.5, 4.0, n),
                                    q=rng.standard_normal(n),
                                    H=rng.standard_normal((m, n)),
                                    g=rng.standard_normal(m),
                                    D=prj.full_space(n))
            z_kkt, _ = kkt_direct_solve(prob)
            cfg = SolverConfig(k_max=200_000, tol_opt=1e-6,
                               use_precondition=True,
                               use_step_selection=True,
                               history_stride=10_000)
            res = pipg_run(prob, cfg)
            scale = max(np.max(np.abs(z_kkt)), 1e-12)
            worst_eq = max(worst_eq,
                           np.max(np.abs(res.z_final - z_kkt)) / scale)
        ok = worst_set <= 1e-3 and worst_eq <= 1e-4
        _verdict(capsys, 3, "solver correctness vs oracles", ok,
                 f"sets={worst_set:.3e} equality={worst_eq:.3e}")

    def test_criterion_04_benchmark_convergence(self, mass_family,
                                                quad_family, capsys):
        ok = True
        for fam in (mass_family, quad_family):
            for runs in fam["results"]:
                r = runs["qr+step"]
                ok &= r.status == "converged" and r.iterations < K_MAX
        _verdict(capsys, 4, "qr+step converges on both benchmarks", ok)

    def test_criterion_05_iteration_reduction(self, mass_family,
                                              quad_family, capsys):
        mass_ratio = (_iters(mass_family, "qr+step").mean()
                      / _iters(mass_family, "plain").mean())
        quad_ratio = (_iters(quad_family, "qr+step").mean()
                      / _iters(quad_family, "plain").mean())
        singles = True
        for fam in (mass_family, quad_family):
            plain = _iters(fam, "plain").mean()
            singles &= _iters(fam, "qr").mean() < plain
            singles &= _iters(fam, "step").mean() < plain
        ok = mass_ratio <= 0.1 and quad_ratio <= 1.0 / 3.0 and singles
        _verdict(capsys, 5, "iteration reduction", ok,
                 f"mass={mass_ratio:.4f} quad={quad_ratio:.4f} "
                 f"singles_strictly_fewer={singles}")

    def test_criterion_06_step_size_contract(self, mass_family,
                                             quad_family, capsys):
        contract_ok = True
        surrogate_ok = True
        for fam in (mass_family, quad_family):
            s = fam["s"]
            eta2 = fam["pp"].eta**2
            for runs in fam["results"]:
                for cfg_name, res in runs.items():
                    sigma = eta2 if CONFIGS[cfg_name][0] else s.sigma
                    for st in res.steps_applied:
                        contract_ok &= st.satisfies_contract(s.lambda_max,
                                                             sigma)
                    for ev in res.step_events:
                        best = gap_bound_surrogate(ev.gamma, s.lambda_max,
                                                   sigma, ev.dz, ev.dv)
                        grid = ev.gamma * np.logspace(-2, 2, 50)
                        surrogate_ok &= all(
                            best <= gap_bound_surrogate(g, s.lambda_max,
                                                        sigma, ev.dz, ev.dv)
                            * (1 + 1e-12)
                            for g in grid)
        ok = contract_ok and surrogate_ok
        _verdict(capsys, 6, "step-size contract and surrogate minimality",
                 ok, f"contract={contract_ok} surrogate={surrogate_ok}")

    def test_criterion_07_projection_suite(self, capsys):
        rng = np.random.default_rng(7)
        families = {
            "box": lambda d: prj.Box(rng.uniform(-2, 0, d),
                                     rng.uniform(0.1, 2, d)),
            "ball": lambda d: prj.Ball(rng.uniform(0.3, 3.0),
                                       rng.standard_normal(d)),
            "halfspace": lambda d: prj.HalfSpace(
                rng.standard_normal(d) + 1e-3, rng.uniform(-1, 1)),
            "soc": lambda d: prj.SecondOrderCone(rng.uniform(0.2, 3.0), d),
            "ball_cap_cone": lambda d: prj.BallCapCone(
                rng.uniform(0.3, 3.0), rng.uniform(0.2, 3.0), d),
        }
        idem = nonexp = optimal = True
        for make in families.values():
            for _ in range(500):
                s = make(int(rng.integers(2, 6)))
                z = rng.standard_normal(s.dim) * 4
                pz = s.project(z)
                idem &= bool(np.max(np.abs(s.project(pz) - pz)) <= 1e-12)
                other = rng.standard_normal(s.dim) * 4
                nonexp &= bool(
                    np.linalg.norm(s.project(other) - pz)
                    <= np.linalg.norm(other - z) + 1e-12)
                # no feasible point is closer to z than its projection
                y = s.project(rng.standard_normal(s.dim) * 4)
                optimal &= bool(np.linalg.norm(z - pz)
                                <= np.linalg.norm(z - y) + 1e-9)
        dykstra_ok = True
        for _ in range(500):
            radius = rng.uniform(0.3, 3.0)
            beta = rng.uniform(0.2, 3.0)
            d = int(rng.integers(2, 6))
            z = rng.standard_normal(d) * 3
            ours = prj.project_ball_cap_cone(z, radius, beta)
            ref = dykstra_project(
                z, [prj.SecondOrderCone(beta, d),
                    prj.Ball(radius, np.zeros(d))], tol=1e-12)
            dykstra_ok &= bool(np.max(np.abs(ours - ref)) <= 1e-8)
        ok = idem and nonexp and optimal and dykstra_ok
        _verdict(capsys, 7, "projection suite", ok,
                 f"idempotent={idem} nonexpansive={nonexp} "
                 f"optimal={optimal} dykstra={dykstra_ok}")

    def test_criterion_08_solution_invariance(self, mass_family,
                                              quad_family, capsys):
        worst = 0.0
        for fam in (mass_family, quad_family):
            for runs in fam["results"]:
                za = runs["plain"].z_final
                zb = runs["qr"].z_final
                scale = max(np.max(np.abs(za)), 1e-12)
                worst = max(worst, np.max(np.abs(za - zb)) / scale)
        ok = worst <= 1e-3
        _verdict(capsys, 8, "preconditioner solution invariance", ok,
                 f"worst={worst:.3e}")

    def test_criterion_09_geometric_demo(self, capsys):
        ang = math.radians(5.0)
        H = np.array([[1.0, 0.0], [math.cos(ang), math.sin(ang)]])
        z_true = np.array([1.0, 1.0])
        prob = CanonicalProblem(P=np.ones(2), q=np.zeros(2), H=H,
                                g=H @ z_true, D=prj.full_space(2))
        # tol_opt=1e-6 puts the fixed-point residual cutoff at 1e-8
        plain = pipg_run(prob, SolverConfig(k_max=1_000_000, tol_opt=1e-6,
                                            history_stride=100_000))
        pre = pipg_run(prob, SolverConfig(k_max=1_000_000, tol_opt=1e-6,
                                          history_stride=100_000,
                                          use_precondition=True))
        ok = (plain.status == "converged" and pre.status == "converged"
              and plain.iterations >= 10 * pre.iterations)
        _verdict(capsys, 9, "nearly parallel rows demo", ok,
                 f"plain={plain.iterations} preconditioned={pre.iterations}")

    def test_criterion_10_storage_accounting(self, mass_family,
                                             quad_family, capsys):
        targets = [(mass_family, 187.0, 2581.0), (quad_family, 11.6, 363.0)]
        ok = True
        detail = []
        for fam, csc_kb, dense_kb in targets:
            prob = fam["problems"][0]
            got_csc = mpc.csc_storage_bytes(prob.H) / 1024
            got_dense = mpc.dense_storage_bytes((prob.m, prob.n)) / 1024
            ok &= abs(got_csc - csc_kb) <= 0.2 * csc_kb
            ok &= abs(got_dense - dense_kb) <= 0.2 * dense_kb
            detail.append(f"csc={got_csc:.2f}KB dense={got_dense:.2f}KB")
        _verdict(capsys, 10, "storage accounting", ok, " ".join(detail))
