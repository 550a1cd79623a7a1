"""PIPG core loop, step-size parameterization, adaptive step-size
selection, and the combined solver with termination logic.

One PIPG iteration is

    w = v + beta * (H z - g)
    z+ = Pi_D[z - alpha * (P z + q + H' w)]
    v+ = w + beta * H (z+ - z)

with step sizes generated from a scalar gamma > 0 as
alpha = 1/(lambda_max + gamma), beta = gamma/sigma, which puts the
convergence condition alpha*(lambda_max + sigma*beta) < 1 exactly at its
boundary.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import matvec
from .precond import qr_precondition
from .problem import ProblemError, SpectralData, spectral_estimates

STEP_CONTRACT_SLACK = 1e-12


class DivergenceError(RuntimeError):
    """Iterates became non-finite."""

    def __init__(self, iteration):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class StepSizes:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0 or self.gamma <= 0:
            raise ProblemError("step sizes must be positive")

    def satisfies_contract(self, lambda_max, sigma):
        return self.alpha * (lambda_max + sigma * self.beta) <= 1.0 + STEP_CONTRACT_SLACK


def steps_from_gamma(gamma, s):
    """Step sizes from the scalar parameter gamma.

    alpha is set exactly to its upper bound 1/(lambda_max + gamma).
    """
    if gamma <= 0:
        raise ProblemError("gamma must be positive")
    return StepSizes(alpha=1.0 / (s.lambda_max + gamma),
                     beta=gamma / s.sigma, gamma=gamma)


@dataclass
class SolverConfig:
    k_max: int = 50_000
    k_update: int = 25
    tol_opt: float = 1e-4
    gamma_init: float = None  # None -> sigma (dual step beta = 1)
    use_precondition: bool = False
    use_step_selection: bool = False
    history_stride: int = 1
    reference_solution: np.ndarray = None
    # "surrogate": gamma = sqrt(sigma)*||v1-wk||/||z1-zk||, the exact
    # minimizer of the gap-bound surrogate. "inverse" flips the ratio for
    # comparison; it is not the surrogate minimizer.
    step_rule: str = "surrogate"

    def __post_init__(self):
        if self.k_max < 1 or self.k_update < 1:
            raise ProblemError("k_max and k_update must be >= 1")
        if self.tol_opt <= 0:
            raise ProblemError("tol_opt must be positive")
        if self.history_stride < 1:
            raise ProblemError("history_stride must be >= 1")
        if self.step_rule not in ("surrogate", "inverse"):
            raise ProblemError(f"unknown step rule {self.step_rule!r}")


@dataclass
class SolverState:
    z: np.ndarray
    v: np.ndarray
    w: np.ndarray
    k: int
    steps: StepSizes


@dataclass
class StepEvent:
    """One firing of the adaptive step-size rule (for diagnostics)."""

    k: int
    dz: float
    dv: float
    gamma: float


@dataclass
class SolverResult:
    z_final: np.ndarray
    w_final: np.ndarray
    iterations: int
    status: str  # "converged" | "max_iters"
    history: list  # (k, error_opt, error_feas, gamma)
    solve_time: float
    precondition_time: float
    steps_applied: list = field(default_factory=list)
    step_events: list = field(default_factory=list)

    def to_dict(self):
        return {
            "status": self.status,
            "iterations": self.iterations,
            "solve_time_ms": self.solve_time * 1e3,
            "precondition_time_ms": self.precondition_time * 1e3,
            "history": [[k, e_opt, e_feas, gamma]
                        for k, e_opt, e_feas, gamma in self.history],
            "z_final": self.z_final.tolist(),
        }


def _iterate(apply_P, q, H, g, D, z, v, alpha, beta):
    w = v + beta * (H @ z - g)
    z_new = D.project(z - alpha * (apply_P(z) + q + H.T @ w))
    v_new = w + beta * (H @ (z_new - z))
    return z_new, v_new, w


def pipg_iterate(prob_view, state, steps):
    """One PIPG iteration on an explicit (P, q, H, g, D) view.

    `prob_view` is a tuple (apply_P, q, H, g, D); returns the next
    SolverState. Raises DivergenceError on non-finite values.
    """
    apply_P, q, H, g, D = prob_view
    z_new, v_new, w_new = _iterate(apply_P, q, H, g, D,
                                   state.z, state.v, steps.alpha, steps.beta)
    if not np.all(np.isfinite(z_new)):
        raise DivergenceError(state.k)
    return SolverState(z=z_new, v=v_new, w=w_new, k=state.k + 1, steps=steps)


def step_selection(z1, v1, zk, wk, s, prev_steps=None, rule="surrogate"):
    """Adaptive gamma minimizing the primal-dual-gap bound surrogate.

    gamma = sqrt(sigma) * ||v1 - wk|| / ||z1 - zk|| is the exact minimizer
    of f(gamma) = (lambda_max+gamma)/2 ||z1-zk||^2 + sigma/(2 gamma)
    ||v1-wk||^2. Degenerate norms keep the previous steps.
    """
    dz = float(np.linalg.norm(z1 - zk))
    dv = float(np.linalg.norm(v1 - wk))
    if dz <= 1e-12 or dv <= 1e-12:
        if prev_steps is None:
            raise ProblemError("degenerate step selection with no previous steps")
        return prev_steps, None
    if rule == "surrogate":
        gamma = float(np.sqrt(s.sigma) * dv / dz)
    else:
        gamma = float(np.sqrt(s.sigma) * dz / dv)
    return steps_from_gamma(gamma, s), (dz, dv, gamma)


def gap_bound_surrogate(gamma, lambda_max, sigma, dz, dv):
    """The surrogate f(gamma) the adaptive rule minimizes."""
    return (lambda_max + gamma) / 2.0 * dz**2 + sigma / (2.0 * gamma) * dv**2


def pipg_run(prob, config, z1=None, v1=None, seed=0):
    """Run PIPG on a canonical problem.

    When config.use_precondition, the equality constraints are replaced by
    their QR-preconditioned form (timed separately as offline work) and
    sigma is eta^2 with no power iteration. Error metrics in the history
    are always measured against the ORIGINAL (H, g).

    Termination: error_opt < tol_opt when a reference solution is
    supplied, otherwise relative fixed-point residual < tol_opt * 1e-2;
    status "max_iters" when neither occurs within k_max iterations.
    """
    if prob.m == 0:
        raise ProblemError("pipg_run requires at least one equality row")
    s = spectral_estimates(prob, seed=seed)

    precondition_time = 0.0
    if config.use_precondition:
        pp = qr_precondition(prob, s)
        H_it, g_it = pp.H_hat, pp.g_hat
        sigma_it = pp.sigma
        precondition_time = pp.elapsed
    else:
        H_it, g_it = prob.H, prob.g
        sigma_it = s.sigma
    s_it = SpectralData(s.lambda_max, s.lambda_min, sigma_it)

    z = prob.D.project(np.zeros(prob.n) if z1 is None else np.asarray(z1, dtype=float))
    v = np.zeros(prob.m) if v1 is None else np.asarray(v1, dtype=float).copy()
    w = v.copy()
    z_init = z.copy()
    v_init = v.copy()

    gamma0 = sigma_it if config.gamma_init is None else config.gamma_init
    steps = steps_from_gamma(gamma0, s_it)
    steps_applied = [steps]
    step_events = []

    ref = config.reference_solution
    ref_inf = None if ref is None else float(np.max(np.abs(ref)))
    if ref is not None and ref_inf == 0:
        raise ProblemError("reference solution must be nonzero")

    apply_P = prob.apply_P
    q = prob.q
    D = prob.D
    H_orig, g_orig = prob.H, prob.g
    history = []

    def record(k, z, error_opt, gamma):
        feas = float(np.max(np.abs(matvec(H_orig, z) - g_orig)))
        e_feas = feas / ref_inf if ref_inf else feas
        history.append((k, error_opt, e_feas, gamma))

    status = "max_iters"
    iterations = 0
    t0 = time.perf_counter()
    fp_tol = config.tol_opt * 1e-2
    for k in range(1, config.k_max):
        if config.use_step_selection and k % config.k_update == 0:
            steps, event = step_selection(z_init, v_init, z, w, s_it,
                                          prev_steps=steps, rule=config.step_rule)
            if event is not None:
                dz, dv, gamma = event
                step_events.append(StepEvent(k=k, dz=dz, dv=dv, gamma=gamma))
                steps_applied.append(steps)
        z_new, v, w = _iterate(apply_P, q, H_it, g_it, D, z, v,
                               steps.alpha, steps.beta)
        iterations = k
        if not np.all(np.isfinite(z_new)):
            raise DivergenceError(k)
        if ref is not None:
            error_opt = float(np.max(np.abs(z_new - ref)) / ref_inf)
            converged = error_opt < config.tol_opt
        else:
            error_opt = float("nan")
            fp = np.max(np.abs(z_new - z)) / (1.0 + np.max(np.abs(z)))
            converged = fp < fp_tol
        z = z_new
        if converged:
            status = "converged"
            record(k, z, error_opt, steps.gamma)
            break
        if k % config.history_stride == 0:
            record(k, z, error_opt, steps.gamma)
    solve_time = time.perf_counter() - t0

    if not history or history[-1][0] != iterations:
        if ref is not None:
            error_opt = float(np.max(np.abs(z - ref)) / ref_inf)
        else:
            error_opt = float("nan")
        record(iterations, z, error_opt, steps.gamma)

    return SolverResult(z_final=z, w_final=w, iterations=iterations,
                        status=status, history=history,
                        solve_time=solve_time,
                        precondition_time=precondition_time,
                        steps_applied=steps_applied,
                        step_events=step_events)
