"""Operator-splitting solver for the two composite recovery programs.

Both programs share the shape

    min_u  ||B u||_structure + data term on A u - y,

where the data term is either the indicator of {phi(A u - y) <= eps}
(constrained recovery) or lam * phi(A u - y) (penalized recovery).  Stacking
M = [B; A] and splitting v = [w; r] with M u = v gives an ADMM iteration whose
u-step is a single cached Cholesky solve of B'B + A'A (the penalty parameter
cancels there, so rescaling rho never re-factorizes) and whose v-step is a
structure-norm prox plus a ball projection or a phi prox.

rho is rescaled every 50 iterations by comparing primal and dual residuals
(doubled or halved, kept inside [1e-4, 1e4]); the scaled dual variable is
rescaled accordingly.  Stops when max(primal, dual) residual <= tol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import norms
from .simplex import SolveReport, Status

_RHO_BOUNDS = (1e-4, 1e4)
_RESCALE_EVERY = 50


@dataclass
class SplitProblem:
    """Data for one recovery solve.

    ``mode`` is 'constraint' (phi-ball of radius epsilon around y) or
    'penalty' (adds lam * phi(Au - y)).  ``structure`` supplies the prox of
    the objective norm; ``b`` is the representation matrix (dense).
    """
    a: np.ndarray
    b: np.ndarray
    y: np.ndarray
    structure: object
    phi: str = "l2"
    mode: str = "constraint"
    epsilon: float = 0.0
    lam: float = 1.0
    rho: float = 1.0
    tol: float = 1e-8
    maxiter: int = 50000
    x0: np.ndarray | None = None

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.a.shape[0] != self.y.size:
            raise ValueError("A row count must match y length")
        if self.a.shape[1] != self.b.shape[1]:
            raise ValueError("A and B must share the column dimension")
        if self.mode not in ("constraint", "penalty"):
            raise ValueError("mode must be 'constraint' or 'penalty'")
        if self.phi not in norms.VECTOR_TAGS:
            raise ValueError("phi must be one of l1/l2/linf")
        if self.rho <= 0 or self.tol <= 0 or self.maxiter < 1:
            raise ValueError("rho, tol must be positive; maxiter >= 1")
        if self.mode == "constraint" and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.mode == "penalty" and self.lam <= 0:
            raise ValueError("lam must be positive")


def _objective(sp, u):
    fit = sp.a @ u - sp.y
    obj = norms.structure_norm(sp.structure, sp.b @ u)
    if sp.mode == "penalty":
        obj += sp.lam * norms.vector_norm(fit, sp.phi)
    return float(obj)


def solve_split(sp):
    """Run the splitting scheme; returns (u, SolveReport).

    The report's residuals always carry the final primal/dual pair plus the
    measured data-fit violation ``phi_gap`` = max(0, phi(Au-y) - eps) for
    constraint mode.
    """
    m, n = sp.a.shape
    e_dim = sp.b.shape[0]
    stack = np.vstack([sp.b, sp.a])
    normal = stack.T @ stack
    warnings = []
    try:
        chol = np.linalg.cholesky(normal)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(normal + 1e-10 * np.eye(n))
        warnings.append("coupling matrix singular; regularized by 1e-10*I")

    def usolve(rhs):
        return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))

    u = np.zeros(n) if sp.x0 is None else np.asarray(sp.x0, dtype=float).copy()
    v = stack @ u
    mu = np.zeros(e_dim + m)  # scaled dual
    rho = float(sp.rho)

    status = Status.MAXITER
    it = 0
    r_primal = r_dual = np.inf
    for it in range(1, sp.maxiter + 1):
        u = usolve(stack.T @ (v - mu))
        mu_full = stack @ u + mu
        w_in, r_in = mu_full[:e_dim], mu_full[e_dim:]
        w = norms.prox_structure_norm(sp.structure, w_in, 1.0 / rho)
        if sp.mode == "constraint":
            r = sp.y + norms.project_ball(r_in - sp.y, sp.phi, sp.epsilon)
        else:
            r = sp.y + norms.prox_vector_norm(r_in - sp.y, sp.phi, sp.lam / rho)
        v_new = np.concatenate([w, r])
        mu = mu_full - v_new
        r_primal = float(np.linalg.norm(stack @ u - v_new))
        r_dual = float(rho * np.linalg.norm(stack.T @ (v_new - v)))
        v = v_new
        if max(r_primal, r_dual) <= sp.tol:
            status = Status.OPTIMAL
            break
        if it % _RESCALE_EVERY == 0:
            if r_primal > 10.0 * r_dual and rho < _RHO_BOUNDS[1]:
                rho = min(rho * 2.0, _RHO_BOUNDS[1])
                mu *= 0.5
            elif r_dual > 10.0 * r_primal and rho > _RHO_BOUNDS[0]:
                rho = max(rho * 0.5, _RHO_BOUNDS[0])
                mu *= 2.0

    fit = sp.a @ u - sp.y
    residuals = {"primal": r_primal, "dual": r_dual}
    if sp.mode == "constraint":
        residuals["phi_gap"] = max(0.0, norms.vector_norm(fit, sp.phi) - sp.epsilon)
    report = SolveReport(status=status, objective=_objective(sp, u),
                         iterations=it, residuals=residuals,
                         warnings=warnings)
    return u, report
