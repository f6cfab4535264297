"""Dense two-phase simplex solver with optimality and infeasibility certificates.

Problems arrive in the general form

    min c.x  subject to  G x (<=|=|>=) h,  lb <= x <= ub,

get converted to equality standard form (shift finite lower bounds, mirror
upper-bounded free variables, split doubly-free variables, slack columns,
nonnegative right-hand side), and are solved by a tableau simplex.  Pivoting
is Dantzig's rule with a stability scan that refuses numerically tiny pivot
elements while an alternative column exists; a streak of degenerate steps
switches to Bland's rule until the vertex is escaped.  Every run is
deterministic.  Optimal bases are re-verified against the untouched data and
a run that lost feasibility to roundoff is retried under Bland ordering
rather than reported as solved.

Reports carry whatever makes the outcome checkable: optimal solves include the
dual vector, complementary-slackness residuals, and a duality-gap-based
near-optimality estimate; infeasible problems a Farkas vector; unbounded
problems an improving ray.  The standard-form data used to verify them is
attached under ``report.standard``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

_TOL = 1e-9
_DEGENERATE_STREAK = 12  # consecutive zero-step pivots before switching to Bland
_PIVOT_MIN = 1e-7   # smallest pivot element worth dividing a row by
_PIVOT_SCAN = 24    # entering candidates to try before accepting a tiny pivot


class Status(Enum):
    OPTIMAL = "optimal"
    MAXITER = "maxiter"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """min c.x s.t. G x (senses) h, lb <= x <= ub.

    ``senses`` holds one of 'le', 'eq', 'ge' per row.  Bounds default to
    x >= 0; entries may be +-inf.
    """
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    senses: tuple = ()
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.G = np.asarray(self.G, dtype=float).reshape(-1, n) if np.size(self.G) \
            else np.zeros((0, n))
        self.h = np.asarray(self.h, dtype=float).ravel()
        m = self.G.shape[0]
        if self.h.size != m:
            raise ValueError("h length must match G row count")
        if not self.senses:
            self.senses = ("le",) * m
        self.senses = tuple(self.senses)
        if len(self.senses) != m or any(s not in ("le", "eq", "ge") for s in self.senses):
            raise ValueError("senses must be 'le'/'eq'/'ge', one per row")
        self.lb = np.zeros(n) if self.lb is None else \
            np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else \
            np.asarray(self.ub, dtype=float).ravel()
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bounds must match variable count")
        for name, arr in (("c", self.c), ("G", self.G), ("h", self.h)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ValueError("bounds must not be NaN")


@dataclass
class SolveReport:
    status: Status
    objective: float = np.nan
    iterations: int = 0
    residuals: dict = field(default_factory=dict)
    dual: np.ndarray | None = None       # multipliers for the original rows
    certificate: dict | None = None      # farkas / ray / bounds evidence
    delta: float = np.nan                # certified near-optimality margin
    used_bland: bool = False
    warnings: list = field(default_factory=list)
    standard: dict | None = None         # equality-form data for verification


class _Standard:
    """Equality-form problem plus the bookkeeping to map back."""

    def __init__(self, lp):
        n = lp.c.size
        # variable transform x = off + S z, z >= 0
        cols = []        # (orig index, sign)
        off = np.zeros(n)
        upper_rows = []  # (z column, range) for doubly bounded variables
        self.bad_bound = None
        for j in range(n):
            lo, hi = lp.lb[j], lp.ub[j]
            if lo > hi + _TOL:
                self.bad_bound = j
                return
            if np.isfinite(lo):
                off[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    upper_rows.append((len(cols) - 1, max(hi - lo, 0.0)))
            elif np.isfinite(hi):
                off[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        nz = len(cols)
        self.cols = cols
        self.off = off
        self.const = float(lp.c @ off)

        g = np.zeros((lp.G.shape[0] + len(upper_rows), nz))
        for k, (j, sgn) in enumerate(cols):
            g[: lp.G.shape[0], k] = sgn * lp.G[:, j]
        h = np.concatenate([lp.h - lp.G @ off,
                            [r for _, r in upper_rows]])
        senses = list(lp.senses)
        for k, (zc, _) in enumerate(upper_rows):
            g[lp.G.shape[0] + k, zc] = 1.0
            senses.append("le")
        self.n_orig_rows = lp.G.shape[0]

        m = g.shape[0]
        slack_rows = [i for i, s in enumerate(senses) if s != "eq"]
        a = np.hstack([g, np.zeros((m, len(slack_rows)))])
        for k, i in enumerate(slack_rows):
            a[i, nz + k] = 1.0 if senses[i] == "le" else -1.0
        self.row_sign = np.ones(m)
        b = h.copy()
        neg = b < 0
        a[neg] *= -1.0
        b[neg] *= -1.0
        self.row_sign[neg] = -1.0
        self.A = a
        self.b = b
        self.c = np.concatenate([np.array([sgn * lp.c[j] for j, sgn in cols]),
                                 np.zeros(len(slack_rows))])
        self.nz = nz
        self.kept_rows = np.arange(m)  # narrowed if redundant rows get dropped

    def x_original(self, z):
        x = self.off.copy()
        for k, (j, sgn) in enumerate(self.cols):
            x[j] += sgn * z[k]
        return x

    def drop_row(self, local_i):
        self.A = np.delete(self.A, local_i, axis=0)
        self.b = np.delete(self.b, local_i)
        self.kept_rows = np.delete(self.kept_rows, local_i)

    def dual_original(self, y):
        """Map equality-form duals back to the original rows (dropped rows -> 0)."""
        full = np.zeros(self.row_sign.size)
        full[self.kept_rows] = y
        full *= self.row_sign
        return full[: self.n_orig_rows]


class _Tableau:
    def __init__(self, a, b, basis):
        m, n = a.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = a
        self.T[:m, n] = b
        self.basis = np.asarray(basis, dtype=int)
        self.n = n
        self.m = m
        self.iterations = 0
        self.bland = False
        self.forced_bland = False
        self._streak = 0

    def set_costs(self, c):
        self.T[-1, :] = 0.0
        self.T[-1, : c.size] = c
        for i, j in enumerate(self.basis):
            cj = self.T[-1, j]
            if cj != 0.0:
                self.T[-1] -= cj * self.T[i]

    def pivot(self, r, j):
        self.T[r] /= self.T[r, j]
        col = self.T[:, j].copy()
        col[r] = 0.0
        self.T -= np.outer(col, self.T[r])
        self.T[:, j] = 0.0
        self.T[r, j] = 1.0
        self.basis[r] = j

    def _leaving_row(self, colv):
        """Min-ratio row for an entering column, or None if it proves
        unboundedness."""
        rows = np.nonzero(colv > _TOL)[0]
        if rows.size == 0:
            return None
        ratios = self.T[rows, self.n] / colv[rows]
        ties = rows[ratios <= ratios.min() + _TOL]
        if self.bland:
            # within the tie window, drop needlessly small pivot elements,
            # then smallest basis index; the pure min-index rule stalls on
            # floating-point tie windows instead of leaving the plateau
            if ties.size > 1:
                mags = colv[ties]
                ties = ties[mags >= 0.5 * mags.max()]
            return int(ties[np.argmin(self.basis[ties])])
        # largest pivot element: the numerically stable choice
        return int(ties[np.argmax(colv[ties])])

    def run(self, allowed, budget):
        """Minimize; returns 'optimal', 'unbounded' (with column), or 'maxiter'."""
        done = 0
        while done < budget:
            red = self.T[-1, : self.n]
            eligible = np.nonzero(allowed & (red < -_TOL))[0]
            if eligible.size == 0:
                return "optimal", None
            if self.bland:
                # smallest eligible column, whatever its pivot element;
                # skipping columns here makes degenerate phase-one starts
                # walk in circles
                j = int(eligible[0])
                r = self._leaving_row(self.T[: self.m, j])
                if r is None:
                    return "unbounded", j
            else:
                order = eligible[np.argsort(red[eligible], kind="stable")]
                # Scan candidates most-negative-first, refusing pivot elements
                # so small that dividing by them would amplify roundoff into
                # the tableau.  Settle for the largest-magnitude refusal only
                # when the scan finds nothing better.
                r = j = None
                fall_r = fall_j = None
                fall_mag = -1.0
                for jc in order[:_PIVOT_SCAN]:
                    rc = self._leaving_row(self.T[: self.m, jc])
                    if rc is None:
                        return "unbounded", int(jc)
                    mag = self.T[rc, jc]
                    if mag >= _PIVOT_MIN:
                        r, j = rc, int(jc)
                        break
                    if mag > fall_mag:
                        fall_r, fall_j, fall_mag = rc, int(jc), mag
                if r is None:
                    r, j = fall_r, fall_j
            if self.T[r, self.n] / self.T[r, j] <= _TOL:
                self._streak += 1
                if self._streak >= _DEGENERATE_STREAK:
                    self.bland = True
            else:
                self._streak = 0
                if not self.forced_bland:
                    self.bland = False  # degenerate vertex escaped
            self.pivot(r, j)
            self.iterations += 1
            done += 1
        return "maxiter", None

    def solution(self):
        z = np.zeros(self.n)
        z[self.basis] = self.T[: self.m, self.n]
        return z


def _duals(std, basis, costs):
    bmat = std.A[:, basis]
    try:
        return np.linalg.solve(bmat.T, costs[basis])
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(bmat.T, costs[basis], rcond=None)[0]


def solve_lp(lp, maxiter=20000, pivot="dantzig"):
    """Solve the LP; returns (x, SolveReport).  x is None unless a basic
    feasible point was reached (optimal or iteration-capped).

    pivot="dantzig" (default) switches to Bland's rule only after a run of
    degenerate steps; pivot="bland" uses Bland's rule from the first step,
    giving an independently-ordered solve useful for cross-checking.
    """
    if pivot not in ("dantzig", "bland"):
        raise ValueError("pivot must be 'dantzig' or 'bland'")
    std = _Standard(lp)
    if std.bad_bound is not None:
        return None, SolveReport(
            status=Status.INFEASIBLE,
            certificate={"kind": "bounds", "index": std.bad_bound})

    m, ncols = std.A.shape
    # initial basis: reuse slack columns that survived sign flips as +1
    basis = np.full(m, -1, dtype=int)
    for j in range(std.nz, ncols):
        rows = np.nonzero(std.A[:, j] == 1.0)[0]
        if rows.size == 1 and basis[rows[0]] == -1:
            basis[rows[0]] = j
    need_art = np.nonzero(basis == -1)[0]
    n_art = need_art.size
    a_work = np.hstack([std.A, np.zeros((m, n_art))])
    for k, i in enumerate(need_art):
        a_work[i, ncols + k] = 1.0
        basis[i] = ncols + k

    tab = _Tableau(a_work, std.b, basis)
    tab.forced_bland = pivot == "bland"
    tab.bland = tab.forced_bland
    warnings = []

    if n_art:
        cost1 = np.zeros(ncols + n_art)
        cost1[ncols:] = 1.0
        tab.set_costs(cost1)
        outcome, _ = tab.run(np.ones(ncols + n_art, dtype=bool), maxiter)
        phase1_obj = -tab.T[-1, -1]
        if outcome == "maxiter":
            return None, SolveReport(status=Status.MAXITER,
                                     iterations=tab.iterations,
                                     residuals={"phase1_objective": phase1_obj})
        if phase1_obj > 1e-7:
            # Farkas vector from the phase-one duals on the working matrix
            cb = cost1[tab.basis]
            try:
                y = np.linalg.solve(a_work[:, tab.basis].T, cb)
            except np.linalg.LinAlgError:
                y = np.linalg.lstsq(a_work[:, tab.basis].T, cb, rcond=None)[0]
            cert = {"kind": "farkas", "y": y, "value": float(y @ std.b),
                    "max_yA": float(np.max(y @ std.A)) if std.A.size else 0.0}
            return None, SolveReport(
                status=Status.INFEASIBLE, iterations=tab.iterations,
                certificate=cert,
                standard={"A": std.A, "b": std.b, "c": std.c},
                residuals={"phase1_objective": phase1_obj})
        # drive leftover artificial variables out of the basis
        drop = []
        for i in range(tab.m):
            if tab.basis[i] >= ncols:
                row = tab.T[i, :ncols]
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > _TOL:
                    tab.pivot(i, j)
                else:
                    drop.append(i)
        if drop:
            tab.T = np.delete(tab.T, drop, axis=0)
            tab.basis = np.delete(tab.basis, drop)
            tab.m -= len(drop)
            for i in sorted(drop, reverse=True):
                std.drop_row(i)
            warnings.append(f"dropped {len(drop)} redundant row(s)")

    allowed = np.zeros(a_work.shape[1], dtype=bool)
    allowed[:ncols] = True
    cost2 = np.zeros(a_work.shape[1])
    cost2[:ncols] = std.c
    tab.set_costs(cost2)
    outcome, unb_col = tab.run(allowed, maxiter - tab.iterations)

    z_full = tab.solution()
    if outcome == "optimal" and tab.m:
        # re-solve on the untouched matrix to shed accumulated pivot error;
        # accept only if the basis system is actually solved (np.linalg.solve
        # returns garbage, not an error, on near-singular bases)
        try:
            zb = np.linalg.solve(std.A[:, tab.basis], std.b)
            resid = float(np.max(np.abs(std.A[:, tab.basis] @ zb - std.b)))
            if zb.min() >= -1e-9 and \
                    resid <= 1e-7 * (1.0 + float(np.abs(std.b).max())):
                z_full = np.zeros_like(z_full)
                z_full[tab.basis] = np.maximum(zb, 0.0)
        except np.linalg.LinAlgError:
            pass
    z = z_full[:ncols]
    x = std.x_original(z[: std.nz])
    obj = float(std.c @ z + std.const)

    if outcome == "unbounded":
        ray = np.zeros(ncols)
        ray[unb_col] = 1.0
        for i, jb in enumerate(tab.basis):
            if jb < ncols:
                ray[jb] = -tab.T[i, unb_col]
        ray_x = std.x_original(ray[: std.nz]) - std.off
        cert = {"kind": "ray", "ray": ray_x, "ray_standard": ray,
                "descent": float(std.c @ ray)}
        return x, SolveReport(status=Status.UNBOUNDED, iterations=tab.iterations,
                              certificate=cert, used_bland=tab.bland,
                              warnings=warnings,
                              standard={"A": std.A, "b": std.b, "c": std.c})

    y = _duals(std, tab.basis, std.c)
    reduced = std.c - std.A.T @ y
    primal_resid = float(np.max(np.abs(std.A @ z - std.b))) if std.b.size else 0.0
    primal_resid = max(primal_resid, float(max(0.0, -z.min())) if z.size else 0.0)
    dual_infeas = float(max(0.0, -reduced.min())) if reduced.size else 0.0
    comp = float(np.max(np.abs(z * reduced))) if z.size else 0.0
    dual_obj = float(y @ std.b) + std.const if std.b.size else std.const
    # certified near-optimality: duality gap plus a cushion for any tiny dual
    # infeasibility (scaled by the iterate's l1 mass; fp-level in practice)
    delta = max(0.0, obj - dual_obj) + dual_infeas * (1.0 + float(np.abs(z).sum()))

    status = Status.OPTIMAL if outcome == "optimal" else Status.MAXITER
    feas_tol = 1e-6 * (1.0 + (float(np.abs(std.b).max()) if std.b.size else 0.0))
    if status is Status.OPTIMAL and primal_resid > feas_tol:
        # the basic point claimed optimal is not feasible: never report it as
        # solved; one Bland-ordered rerun usually lands on a clean basis
        if pivot == "dantzig":
            x2, rep2 = solve_lp(lp, maxiter=maxiter, pivot="bland")
            rep2.warnings.append(
                "default pivoting lost feasibility; reran under Bland's rule")
            return x2, rep2
        status = Status.MAXITER
        warnings.append("pivoting lost primal feasibility; not converged")
    report = SolveReport(
        status=status, objective=obj, iterations=tab.iterations,
        residuals={"primal": primal_resid, "dual": dual_infeas,
                   "comp_slack": comp},
        dual=std.dual_original(y), delta=float(delta), used_bland=tab.bland,
        warnings=warnings,
        standard={"A": std.A, "b": std.b, "c": std.c, "x": z, "y": y})
    return x, report
