"""Canonical problem container, spectral estimates, KKT condition-number
bound, Lagrangian, solution-quality metrics and JSON (de)serialization.

The canonical form is

    minimize   (1/2) z' P z + q' z
    subject to H z = g,  z in D

with P positive definite (stored as a diagonal vector or a dense matrix),
H an m x n matrix (CSC or dense) of full row rank, and D a Cartesian
product of sets with closed-form projections.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from . import projections as prj
from .linalg import (
    DimensionError,
    is_sparse,
    matvec,
    power_iteration_max_eig,
    qr_economy,
)


class ProblemError(ValueError):
    """Problem data violates the canonical-form contract."""


@dataclass
class CanonicalProblem:
    """Problem data (P, q, H, g, D).

    P is either a 1-d array (diagonal) or a 2-d dense symmetric matrix.
    H is a scipy CSC array or a dense ndarray of shape (m, n); m may be 0.
    """

    P: np.ndarray
    q: np.ndarray
    H: object
    g: np.ndarray
    D: prj.ProductSet

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if not is_sparse(self.H):
            self.H = np.asarray(self.H, dtype=float)
        n = self.q.shape[0]
        if self.P.ndim == 1:
            if self.P.shape[0] != n:
                raise ProblemError("diagonal P must have length n")
        elif self.P.shape != (n, n):
            raise ProblemError(f"P must be n x n, got {self.P.shape}")
        if self.H.shape != (self.g.shape[0], n):
            raise ProblemError(
                f"H has shape {self.H.shape}, expected ({self.g.shape[0]}, {n})"
            )
        if self.m > n:
            raise ProblemError("more equality rows than variables (m > n)")
        if self.D.dim != n:
            raise ProblemError(f"D covers {self.D.dim} coordinates, n = {n}")

    @property
    def n(self):
        return self.q.shape[0]

    @property
    def m(self):
        return self.g.shape[0]

    @property
    def p_is_diagonal(self):
        return self.P.ndim == 1

    def apply_P(self, z):
        if self.p_is_diagonal:
            return self.P * z
        return self.P @ z

    def H_dense(self):
        return self.H.toarray() if is_sparse(self.H) else np.asarray(self.H)

    def objective(self, z):
        return 0.5 * float(z @ self.apply_P(z)) + float(self.q @ z)

    def validate(self, check_rank=True):
        """Check positive definiteness of P and (optionally) full row rank of H."""
        if self.p_is_diagonal:
            if np.any(self.P <= 0):
                raise ProblemError("diagonal P must have strictly positive entries")
        else:
            if not np.allclose(self.P, self.P.T, atol=1e-12):
                raise ProblemError("dense P must be symmetric")
            if np.min(np.linalg.eigvalsh(self.P)) <= 0:
                raise ProblemError("P must be positive definite")
        if check_rank and self.m > 0:
            qr_economy(self.H_dense().T)  # raises RankDeficiencyError
        return self


@dataclass
class SpectralData:
    """Extremal eigenvalues of P and of H'H.

    sigma is the largest eigenvalue of H'H; sigma_min_sq, when available,
    is the smallest squared singular value of H (diagnostics only).
    """

    lambda_max: float
    lambda_min: float
    sigma: float
    sigma_min_sq: float = None

    def __post_init__(self):
        if not (0 < self.lambda_min <= self.lambda_max):
            raise ProblemError("need 0 < lambda_min <= lambda_max")
        if self.sigma <= 0:
            raise ProblemError("sigma must be positive")


def spectral_estimates(prob, seed=0, want_sigma_min=False):
    """Extremal eigenvalues of P and max eigenvalue of H'H.

    Diagonal P gives exact extremal diagonal entries; dense P uses power
    iteration for lambda_max and shifted power iteration for lambda_min.
    sigma comes from power iteration on x -> H'(H x). The smallest squared
    singular value of H is computed by dense SVD only on demand.
    """
    if prob.p_is_diagonal:
        lam_max = float(np.max(prob.P))
        lam_min = float(np.min(prob.P))
    else:
        lam_max = power_iteration_max_eig(
            lambda x: prob.P @ x, prob.n, seed=seed
        )
        shift = power_iteration_max_eig(
            lambda x: lam_max * x - prob.P @ x, prob.n, seed=seed + 1
        )
        lam_min = lam_max - shift
    if prob.m == 0:
        raise ProblemError("sigma undefined for a problem with no equality rows")
    H = prob.H
    sigma = power_iteration_max_eig(
        lambda x: matvec(H, matvec(H, x), transpose=True), prob.n, seed=seed + 2
    )
    sigma_min_sq = None
    if want_sigma_min:
        svals = np.linalg.svd(prob.H_dense(), compute_uv=False)
        sigma_min_sq = float(np.min(svals) ** 2)
    return SpectralData(lam_max, lam_min, sigma, sigma_min_sq)


def kkt_condition_bound(s):
    """Upper bound on the spectral condition number of the KKT matrix.

    Uses sigma_max = sqrt(s.sigma) and sigma_min = sqrt(s.sigma_min_sq).
    Returns +inf when sigma_min is zero (rank-deficient H).
    """
    if s.sigma_min_sq is None:
        raise ProblemError("condition bound needs sigma_min_sq")
    if s.sigma_min_sq <= 0:
        return np.inf
    lam_max, lam_min = s.lambda_max, s.lambda_min
    smax2, smin2 = s.sigma, s.sigma_min_sq
    num = lam_max + np.sqrt(lam_max**2 + 4 * smax2)
    first = num / (np.sqrt(lam_max**2 + 4 * smin2) - lam_max)
    second = num / (2 * lam_min)
    return float(max(first, second))


def optimal_singular_value(lam_max, lam_min):
    """Common singular value of H that minimizes the condition-number bound.

    Equal to sqrt(lam_max * lam_min + lam_min^2); substituting it for both
    extremal singular values equalizes the two arguments of the bound.
    """
    if lam_min <= 0 or lam_max < lam_min:
        raise ProblemError("need 0 < lambda_min <= lambda_max")
    return float(np.sqrt(lam_max * lam_min + lam_min**2))


def lagrangian(prob, z, w):
    """L(z, w) = (1/2) z'Pz + q'z + w'(Hz - g)."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if z.shape != (prob.n,) or w.shape != (prob.m,):
        raise DimensionError("lagrangian: dimension mismatch")
    resid = matvec(prob.H, z) - prob.g if prob.m else np.zeros(0)
    return prob.objective(z) + float(w @ resid)


def error_metrics(prob, z_k, z_star):
    """Relative distance to optimum and equality-constraint feasibility.

    error_opt = ||z_k - z*||_inf / ||z*||_inf
    error_feas = ||H z_k - g||_inf / ||z*||_inf

    H and g are the problem's original (unpreconditioned) data so runs
    with and without preconditioning are comparable.
    """
    z_k = np.asarray(z_k, dtype=float)
    z_star = np.asarray(z_star, dtype=float)
    denom = np.max(np.abs(z_star))
    if denom == 0:
        raise ProblemError("error metrics undefined for z* = 0")
    error_opt = float(np.max(np.abs(z_k - z_star)) / denom)
    if prob.m:
        error_feas = float(np.max(np.abs(matvec(prob.H, z_k) - prob.g)) / denom)
    else:
        error_feas = 0.0
    return error_opt, error_feas


def kkt_residual(prob, z, w, alpha_probe=None, s=None):
    """Projected-stationarity KKT residual.

    max(||z - Pi_D[z - a*(Pz + q + H'w)]||_inf, ||Hz - g||_inf); zero
    exactly at KKT points. The probe step defaults to 1/(lambda_max + sigma).
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if alpha_probe is None:
        if s is None:
            if prob.m:
                s = spectral_estimates(prob)
                alpha_probe = 1.0 / (s.lambda_max + s.sigma)
            else:
                lam = np.max(prob.P) if prob.p_is_diagonal else float(
                    np.max(np.linalg.eigvalsh(prob.P))
                )
                alpha_probe = 1.0 / lam
        else:
            alpha_probe = 1.0 / (s.lambda_max + s.sigma)
    if alpha_probe <= 0:
        raise ProblemError("probe step must be positive")
    grad = prob.apply_P(z) + prob.q
    if prob.m:
        grad = grad + matvec(prob.H, w, transpose=True)
        feas = float(np.max(np.abs(matvec(prob.H, z) - prob.g)))
    else:
        feas = 0.0
    stat = float(np.max(np.abs(z - prob.D.project(z - alpha_probe * grad))))
    return max(stat, feas)


# --- JSON serialization -------------------------------------------------

def _set_to_json(s, start):
    rng = [int(start), int(start + s.dim)]
    if isinstance(s, prj.Box):
        return {"type": "box", "params": {"lower": s.lower.tolist(),
                                          "upper": s.upper.tolist()}, "range": rng}
    if isinstance(s, prj.Ball):
        return {"type": "ball", "params": {"radius": s.radius,
                                           "center": s.center.tolist()}, "range": rng}
    if isinstance(s, prj.HalfSpace):
        return {"type": "halfspace", "params": {"normal": s.normal.tolist(),
                                                "offset": s.offset}, "range": rng}
    if isinstance(s, prj.SecondOrderCone):
        return {"type": "soc", "params": {"beta": s.beta, "dim": s.dim}, "range": rng}
    if isinstance(s, prj.BallCapCone):
        return {"type": "ball_cap_cone",
                "params": {"radius": s.radius, "beta": s.beta, "dim": s.dim},
                "range": rng}
    if isinstance(s, prj.FullSpace):
        return {"type": "fullspace", "params": {"dim": s.dim}, "range": rng}
    raise TypeError(f"unknown set type {type(s)!r}")


def _set_from_json(d):
    p = d["params"]
    kind = d["type"]
    if kind == "box":
        return prj.Box(p["lower"], p["upper"])
    if kind == "ball":
        return prj.Ball(p["radius"], p["center"])
    if kind == "halfspace":
        return prj.HalfSpace(p["normal"], p["offset"])
    if kind == "soc":
        return prj.SecondOrderCone(p["beta"], p["dim"])
    if kind == "ball_cap_cone":
        return prj.BallCapCone(p["radius"], p["beta"], p["dim"])
    if kind == "fullspace":
        return prj.FullSpace(p["dim"])
    raise ValueError(f"unknown set type {kind!r}")


def problem_to_dict(prob):
    if prob.p_is_diagonal:
        P = {"diag": prob.P.tolist()}
    else:
        P = {"dense": prob.P.tolist()}
    if is_sparse(prob.H):
        H = {"csc": {"colptr": prob.H.indptr.tolist(),
                     "rowval": prob.H.indices.tolist(),
                     "nzval": prob.H.data.tolist()}}
    else:
        H = {"dense": np.asarray(prob.H).tolist()}
    return {
        "n": prob.n,
        "m": prob.m,
        "P": P,
        "q": prob.q.tolist(),
        "H": H,
        "g": prob.g.tolist(),
        "D": [_set_to_json(s, start) for s, start in prob.D.blocks],
    }


def problem_from_dict(d):
    n, m = int(d["n"]), int(d["m"])
    P = np.array(d["P"]["diag"]) if "diag" in d["P"] else np.array(d["P"]["dense"])
    if "csc" in d["H"]:
        c = d["H"]["csc"]
        H = scipy.sparse.csc_array(
            (np.array(c["nzval"], dtype=float),
             np.array(c["rowval"], dtype=np.int64),
             np.array(c["colptr"], dtype=np.int64)),
            shape=(m, n),
        )
    else:
        H = np.array(d["H"]["dense"], dtype=float).reshape(m, n)
    D = prj.ProductSet.from_sets([_set_from_json(sd) for sd in d["D"]])
    return CanonicalProblem(P=P, q=np.array(d["q"], dtype=float), H=H,
                            g=np.array(d["g"], dtype=float), D=D)


def save_problem(prob, path):
    with open(path, "w") as f:
        json.dump(problem_to_dict(prob), f)


def load_problem(path):
    with open(path) as f:
        return problem_from_dict(json.load(f))
