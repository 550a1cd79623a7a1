"""Independent reference solutions for testing.

Three oracles, none of which shares the PIPG iteration path:

- direct dense KKT solve for equality-only problems,
- a scaled ADMM reference solver for the full problem class,
- Dykstra's alternating projections for set intersections.
"""

import numpy as np
import scipy.linalg

from .problem import ProblemError


class OracleFailure(RuntimeError):
    """Oracle did not converge; the test fixture is invalid."""


_DESK_SCALE = 2000


def kkt_direct_solve(prob):
    """Solve the equality-only problem by a dense KKT factorization.

    D must be the full space. Returns (z_star, w_star).
    """
    if not prob.D.is_all_fullspace():
        raise ProblemError("direct KKT solve requires D = full space")
    n, m = prob.n, prob.m
    if n + m > _DESK_SCALE:
        raise ProblemError(f"dense KKT solve limited to n + m <= {_DESK_SCALE}")
    P = np.diag(prob.P) if prob.p_is_diagonal else prob.P
    if m == 0:
        z = np.linalg.solve(P, -prob.q)
        return z, np.zeros(0)
    H = prob.H_dense()
    K = np.block([[P, H.T], [H, np.zeros((m, m))]])
    rhs = np.concatenate([-prob.q, prob.g])
    try:
        sol = scipy.linalg.solve(K, rhs, assume_a="sym")
    except np.linalg.LinAlgError as e:
        raise ProblemError(f"singular KKT matrix: {e}") from e
    resid = np.max(np.abs(K @ sol - rhs))
    if not np.isfinite(resid) or resid > 1e-8 * max(1.0, np.max(np.abs(rhs))):
        raise ProblemError(f"KKT solve residual too large: {resid:.3e}")
    return sol[:n], sol[n:]


def splitting_reference_solve(prob, tol=1e-9, max_iters=100_000, rho=None,
                              over_relax=1.6):
    """Reference primal solution via scaled ADMM with a consensus copy in D.

    Splits z (carrying the equality constraint, handled inside an exact
    KKT solve each iteration) from a copy s constrained to D. The KKT
    matrix is factorized once. Algorithmically unrelated to PIPG, so it
    serves as an independent cross-check. Returns z, which satisfies
    H z = g exactly.
    """
    if tol <= 0:
        raise ProblemError("tol must be positive")
    n, m = prob.n, prob.m
    if n + m > _DESK_SCALE:
        raise ProblemError(f"reference solver limited to n + m <= {_DESK_SCALE}")
    P = np.diag(prob.P) if prob.p_is_diagonal else np.asarray(prob.P)
    if rho is None:
        lam = prob.P if prob.p_is_diagonal else np.linalg.eigvalsh(P)
        rho = float(np.sqrt(np.max(lam) * np.min(lam)))
    H = prob.H_dense() if m else np.zeros((0, n))
    K = np.block([[P + rho * np.eye(n), H.T], [H, np.zeros((m, m))]])
    lu, piv = scipy.linalg.lu_factor(K)

    s = prob.D.project(np.zeros(n))
    u = np.zeros(n)
    rhs = np.empty(n + m)
    rhs[n:] = prob.g
    z = s.copy()
    for _ in range(max_iters):
        rhs[:n] = rho * (s - u) - prob.q
        z = scipy.linalg.lu_solve((lu, piv), rhs)[:n]
        z_r = over_relax * z + (1.0 - over_relax) * s
        s_old = s
        s = prob.D.project(z_r + u)
        u = u + z_r - s
        r_pri = np.max(np.abs(z - s))
        r_dual = rho * np.max(np.abs(s - s_old))
        scale = max(1.0, np.max(np.abs(z)))
        if r_pri <= tol * scale and r_dual <= tol * scale:
            return z
    raise OracleFailure(
        f"ADMM reference did not reach tol={tol:g} in {max_iters} iterations "
        f"(primal {r_pri:.3e}, dual {r_dual:.3e})"
    )


def dykstra_project(z, sets, tol=1e-10, max_iters=100_000):
    """Projection onto the intersection of convex sets by Dykstra's method.

    All sets act on the full vector. Converges to the exact Euclidean
    projection for closed convex sets with nonempty intersection.
    """
    if tol <= 0:
        raise ProblemError("tol must be positive")
    x = np.asarray(z, dtype=float).copy()
    corrections = [np.zeros_like(x) for _ in sets]
    for _ in range(max_iters):
        x_prev = x.copy()
        for i, s in enumerate(sets):
            y = s.project(x + corrections[i])
            corrections[i] = x + corrections[i] - y
            x = y
        if np.max(np.abs(x - x_prev)) <= tol:
            return x
    raise OracleFailure(f"Dykstra did not converge in {max_iters} sweeps")
