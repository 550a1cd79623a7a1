"""QR preconditioner for the equality constraints.

Replaces (H, g) by (H_hat, g_hat) = (eta Q', eta R^{-T} g) where
H' = Q R is the economy QR factorization of H transposed and
eta = sqrt(lambda_max * lambda_min + lambda_min^2). The transformed rows
are orthogonal with common norm eta, so H_hat H_hat' = eta^2 I and every
singular value of H_hat equals eta, which minimizes the KKT
condition-number bound. The feasible set {z : H_hat z = g_hat} is
unchanged.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import RankDeficiencyError, qr_economy, solve_lower_triangular
from .problem import CanonicalProblem, ProblemError


class PreconditioningError(ValueError):
    """Preconditioning assumptions violated (e.g. H not full row rank)."""


@dataclass
class PreconditionedProblem:
    """Output of the QR preconditioner, linked to its source problem.

    H_hat is dense (the transform destroys sparsity); sigma of the
    preconditioned constraints is eta^2 by construction, no power
    iteration needed.
    """

    eta: float
    H_hat: np.ndarray
    g_hat: np.ndarray
    source: CanonicalProblem
    elapsed: float = field(default=0.0)

    @property
    def sigma(self):
        return self.eta**2


def qr_precondition(prob, s):
    """Apply the QR preconditioner to a problem's equality constraints.

    `s` supplies lambda_max and lambda_min of P. Raises
    PreconditioningError when H is rank deficient (full row rank is
    required for the factorization to be invertible).
    """
    if prob.m == 0:
        raise ProblemError("nothing to precondition: no equality rows")
    t0 = time.perf_counter()
    eta = float(np.sqrt(s.lambda_max * s.lambda_min + s.lambda_min**2))
    try:
        Q, R = qr_economy(prob.H_dense().T)
    except RankDeficiencyError as e:
        raise PreconditioningError(
            f"H must have full row rank to precondition: {e}"
        ) from e
    H_hat = eta * Q.T
    # g_hat = eta * R^{-T} g via one lower-triangular solve; R^{-1} is
    # never formed.
    g_hat = eta * solve_lower_triangular(R.T, prob.g)
    elapsed = time.perf_counter() - t0
    return PreconditionedProblem(eta=eta, H_hat=H_hat, g_hat=g_hat,
                                 source=prob, elapsed=elapsed)


def verify_orthogonality(pp):
    """Max-norm deviation of H_hat H_hat' from eta^2 I (diagnostic)."""
    m = pp.H_hat.shape[0]
    gram = pp.H_hat @ pp.H_hat.T
    return float(np.max(np.abs(gram - pp.eta**2 * np.eye(m))))
