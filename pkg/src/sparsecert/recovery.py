"""The two recovery programs and their closed-form error bounds.

``recover_regular`` minimizes the structure norm of Bu subject to a data-fit
ball phi(Au - y) <= epsilon; ``recover_penalized`` minimizes the structure
norm plus lam * phi(Au - y) and deliberately ignores epsilon (the penalized
program needs no a priori noise level).  Polyhedral instances go through the
exact LP backend, everything else through operator splitting; ``method="auto"``
picks for you.

``error_bound`` evaluates the two closed forms

    regular:    (beta*(2*eps + delta_phi) + delta + 2*delta_x) / (1 - gamma)
    penalized:  (2*delta_x + delta + 2*lam*phi_xi) / (1 - gamma),

valid whenever (gamma, beta) certify the s-sparsity condition for the pair
(A, structure); the penalized form additionally requires lam >= beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import norms
from .engine import LinearProgram, SolveReport, SplitProblem, Status, solve_lp, \
    solve_split
from .norms import UnsupportedNormError


class GammaTooLargeError(ValueError):
    """The contraction factor gamma must be < 1 for the bounds to hold."""


class LambdaBelowBetaError(ValueError):
    """The penalized bound needs penalty weight lam >= beta."""


@dataclass
class RecoveryProblem:
    a: np.ndarray
    b: object                 # RepresentationMap or dense matrix
    y: np.ndarray
    phi: str = "l2"
    epsilon: float = 0.0

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.a.shape[0] != self.y.size:
            raise ValueError("A row count must match y length")
        if self.phi not in norms.VECTOR_TAGS:
            raise ValueError("phi must be one of l1/l2/linf")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def b_matrix(self):
        return self.b.matrix if hasattr(self.b, "matrix") else \
            np.atleast_2d(np.asarray(self.b, dtype=float))


@dataclass
class RecoveryResult:
    x_hat: np.ndarray | None
    w_hat: np.ndarray | None   # always recomputed as B @ x_hat
    delta: float
    delta_phi: float
    report: SolveReport

    @property
    def feasible_solve(self):
        return self.report.status in (Status.OPTIMAL, Status.MAXITER)


@dataclass
class ErrorBudget:
    """Tolerances entering the closed-form bounds; all nonnegative."""
    epsilon: float = 0.0
    delta_x: float = 0.0
    delta_phi: float = 0.0
    delta: float = 0.0
    lam: float | None = None   # penalized only
    phi_xi: float = 0.0        # realized phi(noise), penalized only

    def __post_init__(self):
        for name in ("epsilon", "delta_x", "delta_phi", "delta", "phi_xi"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be positive")


def error_bound(gamma, beta, budget, mode):
    """Closed-form bound on the structure-norm recovery error ||B(x_hat - x)||."""
    if not np.isfinite(gamma) or gamma < 0:
        raise ValueError("gamma must be a finite nonnegative real")
    if gamma >= 1:
        raise GammaTooLargeError(f"gamma = {gamma} >= 1; no bound available")
    if not np.isfinite(beta) or beta < 0:
        raise ValueError("beta must be a finite nonnegative real")
    if mode == "regular":
        num = beta * (2.0 * budget.epsilon + budget.delta_phi) \
            + budget.delta + 2.0 * budget.delta_x
    elif mode == "penalized":
        if budget.lam is None:
            raise ValueError("penalized bound needs budget.lam")
        if budget.lam < beta:
            raise LambdaBelowBetaError(
                f"lam = {budget.lam} < beta = {beta}")
        num = 2.0 * budget.delta_x + budget.delta \
            + 2.0 * budget.lam * budget.phi_xi
    else:
        raise ValueError("mode must be 'regular' or 'penalized'")
    return float(num / (1.0 - gamma))


# ---------------------------------------------------------------------------
# LP reformulations


def _objective_parts(structure, n):
    """LP encoding of ||B u||: aux-variable costs and epigraph rows.

    Returns (aux_cost, rows) with rows as (u_coeffs, aux_coeffs, rhs); every
    row reads u_coeffs . u + aux_coeffs . t <= rhs.  Raises
    UnsupportedNormError when the structure norm is not polyhedral (any l2
    block).
    """
    if structure.kind == "plain":
        cost = np.ones(n)
        rows = []
        for i in range(n):
            for sgn in (1.0, -1.0):
                uc = np.zeros(n)
                uc[i] = sgn
                ac = np.zeros(n)
                ac[i] = -1.0
                rows.append((uc, ac, 0.0))
        return cost, rows
    if structure.kind == "group":
        if any(t == "l2" for t in structure.block_norms):
            raise UnsupportedNormError("l2 blocks have no exact LP form")
        l1_mult = np.zeros(n)
        for v, t in zip(structure.blocks, structure.block_norms):
            if t == "l1":
                for i in v:
                    l1_mult[i] += 1.0
        l1_coords = [i for i in range(n) if l1_mult[i] > 0]
        linf_blocks = [l for l, t in enumerate(structure.block_norms)
                       if t == "linf"]
        n_aux = len(l1_coords) + len(linf_blocks)
        cost = np.concatenate([l1_mult[l1_coords],
                               np.ones(len(linf_blocks))])
        rows = []
        for k, i in enumerate(l1_coords):
            for sgn in (1.0, -1.0):
                uc = np.zeros(n)
                uc[i] = sgn
                ac = np.zeros(n_aux)
                ac[k] = -1.0
                rows.append((uc, ac, 0.0))
        for k, l in enumerate(linf_blocks):
            for i in structure.blocks[l]:
                for sgn in (1.0, -1.0):
                    uc = np.zeros(n)
                    uc[i] = sgn
                    ac = np.zeros(n_aux)
                    ac[len(l1_coords) + k] = -1.0
                    rows.append((uc, ac, 0.0))
        return cost, rows
    raise UnsupportedNormError("nuclear norm has no exact LP form")


def _lp_solvable(structure, phi, epsilon, mode):
    if structure.kind == "lowrank":
        return False
    if structure.kind == "group" and any(t == "l2" for t in structure.block_norms):
        return False
    if phi in ("l1", "linf"):
        return True
    return mode == "regular" and epsilon == 0.0


def _build_recovery_lp(problem, structure, mode, lam=0.0):
    """Exact LP for polyhedral instances.  Variable layout: [u | obj aux | fit aux]."""
    a, y = problem.a, problem.y
    m, n = a.shape
    obj_cost, obj_rows = _objective_parts(structure, n)
    n_obj = obj_cost.size

    fit_cost = np.zeros(0)
    fit_rows = []       # (u_coeffs, fit_aux_coeffs, rhs, sense)
    if mode == "regular" and problem.epsilon == 0.0:
        for j in range(m):
            fit_rows.append((a[j], np.zeros(0), y[j], "eq"))
    elif problem.phi == "l1":
        fit_cost = np.full(m, lam) if mode == "penalized" else np.zeros(m)
        for j in range(m):
            for sgn in (1.0, -1.0):
                fc = np.zeros(m)
                fc[j] = -1.0
                fit_rows.append((sgn * a[j], fc, sgn * y[j], "le"))
        if mode == "regular":
            fit_rows.append((np.zeros(n), np.ones(m), problem.epsilon, "le"))
    elif problem.phi == "linf":
        if mode == "penalized":
            fit_cost = np.array([lam])
            for j in range(m):
                for sgn in (1.0, -1.0):
                    fit_rows.append((sgn * a[j], -np.ones(1), sgn * y[j], "le"))
        else:
            for j in range(m):
                for sgn in (1.0, -1.0):
                    fit_rows.append((sgn * a[j], np.zeros(0),
                                     sgn * y[j] + problem.epsilon, "le"))
    else:
        raise UnsupportedNormError("phi=l2 has no exact LP form with epsilon > 0")

    n_fit = fit_cost.size
    nv = n + n_obj + n_fit
    g_rows, h_vals, senses = [], [], []
    for uc, ac, rhs in obj_rows:
        row = np.zeros(nv)
        row[:n] = uc
        row[n: n + n_obj] = ac
        g_rows.append(row)
        h_vals.append(rhs)
        senses.append("le")
    for uc, fc, rhs, sense in fit_rows:
        row = np.zeros(nv)
        row[:n] = uc
        row[n + n_obj:] = fc
        g_rows.append(row)
        h_vals.append(rhs)
        senses.append(sense)
    c = np.concatenate([np.zeros(n), obj_cost, fit_cost])
    lb = np.concatenate([np.full(n, -np.inf), np.zeros(n_obj + n_fit)])
    return LinearProgram(c=c, G=np.array(g_rows), h=np.array(h_vals),
                         senses=tuple(senses), lb=lb), n


def _finish(problem, structure, x, report, mode, lam=0.0):
    if x is None:
        return RecoveryResult(x_hat=None, w_hat=None, delta=np.inf,
                              delta_phi=np.inf, report=report)
    w = problem.b_matrix @ x
    fit = norms.vector_norm(problem.a @ x - problem.y, problem.phi)
    if mode == "regular":
        delta_phi = max(0.0, fit - problem.epsilon)
    else:
        delta_phi = 0.0  # penalized program has no feasibility constraint
    if np.isfinite(report.delta):
        delta = float(report.delta)
    else:
        # splitting path: residual-based near-optimality estimate
        res = report.residuals
        delta = float((res.get("primal", 0.0) + res.get("dual", 0.0))
                      * (1.0 + np.abs(w).sum()))
    report.objective = norms.structure_norm(structure, w) + \
        (lam * fit if mode == "penalized" else 0.0)
    return RecoveryResult(x_hat=x, w_hat=w, delta=delta, delta_phi=delta_phi,
                          report=report)


def _solve_via_split(problem, structure, mode, lam, tol, maxiter, x0):
    sp = SplitProblem(a=problem.a, b=problem.b_matrix, y=problem.y,
                      structure=structure, phi=problem.phi, mode=mode
                      if mode != "penalized" else "penalty",
                      epsilon=problem.epsilon, lam=max(lam, 1e-12),
                      tol=tol, maxiter=maxiter, x0=x0)
    return solve_split(sp)


def recover_regular(problem, structure, method="auto", tol=1e-8,
                    maxiter=50000, x0=None):
    """Minimize ||B u|| subject to phi(A u - y) <= epsilon.

    method 'lp' forces the exact polyhedral path (UnsupportedNormError when
    none exists), 'split' the iterative one, 'auto' prefers LP whenever exact.
    Returns a RecoveryResult whose delta/delta_phi are measured, not assumed.
    """
    mode = "regular"
    use_lp = method == "lp" or (method == "auto"
                                and _lp_solvable(structure, problem.phi,
                                                 problem.epsilon, mode))
    if method not in ("auto", "lp", "split"):
        raise ValueError("method must be auto/lp/split")
    if use_lp:
        lp, n = _build_recovery_lp(problem, structure, mode)
        x, report = solve_lp(lp)
        if report.status in (Status.INFEASIBLE, Status.UNBOUNDED):
            return RecoveryResult(x_hat=None, w_hat=None, delta=np.inf,
                                  delta_phi=np.inf, report=report)
        return _finish(problem, structure, x[:n], report, "regular")
    if problem.phi == "l2":
        # infeasibility is decidable for the euclidean ball: compare epsilon
        # with the least-squares residual of the data equations
        resid = problem.y - problem.a @ np.linalg.lstsq(
            problem.a, problem.y, rcond=None)[0]
        min_fit = float(np.linalg.norm(resid))
        if min_fit > problem.epsilon + max(1e-9, 1e-9 * np.abs(problem.y).max(initial=0.0)):
            report = SolveReport(status=Status.INFEASIBLE,
                                 residuals={"min_phi": min_fit})
            return RecoveryResult(x_hat=None, w_hat=None, delta=np.inf,
                                  delta_phi=np.inf, report=report)
    x, report = _solve_via_split(problem, structure, "constraint", 0.0,
                                 tol, maxiter, x0)
    return _finish(problem, structure, x, report, "regular")


def recover_penalized(problem, structure, lam, method="auto", tol=1e-8,
                      maxiter=50000, x0=None):
    """Minimize ||B u|| + lam * phi(A u - y); problem.epsilon plays no role."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if method not in ("auto", "lp", "split"):
        raise ValueError("method must be auto/lp/split")
    use_lp = method == "lp" or (method == "auto"
                                and structure.kind != "lowrank"
                                and problem.phi in ("l1", "linf")
                                and not (structure.kind == "group"
                                         and "l2" in structure.block_norms))
    if use_lp:
        lp, n = _build_recovery_lp(problem, structure, "penalized", lam)
        x, report = solve_lp(lp)
        if report.status in (Status.INFEASIBLE, Status.UNBOUNDED):
            return RecoveryResult(x_hat=None, w_hat=None, delta=np.inf,
                                  delta_phi=np.inf, report=report)
        return _finish(problem, structure, x[:n], report, "penalized", lam)
    x, report = _solve_via_split(problem, structure, "penalized", lam,
                                 tol, maxiter, x0)
    return _finish(problem, structure, x, report, "penalized", lam)
