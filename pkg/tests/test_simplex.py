"""Dense simplex backend: correctness against vertex enumeration plus the
status/certificate contract."""

import numpy as np
import pytest

from sparsecert.engine import LinearProgram, Status, solve_lp

from oracles import vertex_enumeration_lp


def random_feasible_lp(rng, n=None, m=None):
    """Bounded LP with a known interior point (boxes keep it bounded)."""
    n = int(rng.integers(2, 5)) if n is None else n
    m = int(rng.integers(1, 9)) if m is None else m
    g = rng.standard_normal((m, n))
    x0 = rng.uniform(0.2, 1.5, size=n)
    senses = [("le", "ge", "eq")[rng.integers(0, 3)] for _ in range(m)]
    h = g @ x0
    for i, s in enumerate(senses):
        if s == "le":
            h[i] += rng.uniform(0.1, 1.0)
        elif s == "ge":
            h[i] -= rng.uniform(0.1, 1.0)
    c = rng.standard_normal(n)
    ub = np.full(n, 3.0)
    return LinearProgram(c=c, G=g, h=h, senses=senses, ub=ub)


def test_matches_vertex_enumeration(rng):
    for _ in range(60):
        lp = random_feasible_lp(rng)
        x, rep = solve_lp(lp)
        assert rep.status is Status.OPTIMAL
        oracle, _ = vertex_enumeration_lp(lp)
        assert rep.objective == pytest.approx(oracle, abs=1e-8)
        assert np.all(x >= lp.lb - 1e-9) and np.all(x <= lp.ub + 1e-9)


def test_pivot_rules_agree(rng):
    for _ in range(25):
        lp = random_feasible_lp(rng)
        _, r1 = solve_lp(lp, pivot="dantzig")
        _, r2 = solve_lp(lp, pivot="bland")
        assert r1.status is Status.OPTIMAL and r2.status is Status.OPTIMAL
        assert r1.objective == pytest.approx(r2.objective, abs=1e-8)


def test_simple_known_solution():
    # max x+y over the unit box, written as a min
    lp = LinearProgram(c=[-1.0, -1.0], G=np.eye(2), h=[1.0, 1.0])
    x, rep = solve_lp(lp)
    assert rep.status is Status.OPTIMAL
    assert np.allclose(x, [1.0, 1.0], atol=1e-9)
    assert rep.objective == pytest.approx(-2.0)


def test_equality_rows():
    lp = LinearProgram(c=[1.0, 2.0, 0.0], G=[[1, 1, 1]], h=[1.0],
                       senses=("eq",))
    x, rep = solve_lp(lp)
    assert rep.status is Status.OPTIMAL
    assert rep.objective == pytest.approx(0.0)       # all mass on x3
    assert x.sum() == pytest.approx(1.0)


def test_free_variables_via_bounds():
    # minimize x subject to x >= -4 with free upper end
    lp = LinearProgram(c=[1.0], G=np.zeros((0, 1)), h=[],
                       lb=[-4.0], ub=[np.inf])
    x, rep = solve_lp(lp)
    assert rep.status is Status.OPTIMAL
    assert x[0] == pytest.approx(-4.0)


def test_infeasible_reports_farkas_certificate():
    # x <= -1 with x >= 0 is empty
    lp = LinearProgram(c=[1.0], G=[[1.0]], h=[-1.0])
    x, rep = solve_lp(lp)
    assert rep.status is Status.INFEASIBLE and x is None
    cert = rep.certificate
    assert cert is not None and cert.get("kind") == "farkas"
    # separation in the equality form: y.b > 0 while y.A <= 0, so no
    # nonnegative x can satisfy Ax = b
    y = np.asarray(cert["y"])
    std = rep.standard
    assert y @ std["b"] > 1e-9
    assert np.max(y @ std["A"]) <= 1e-9
    assert cert["value"] == pytest.approx(float(y @ std["b"]))


def test_unbounded_reports_ray():
    lp = LinearProgram(c=[-1.0, 0.0], G=[[0.0, 1.0]], h=[1.0])
    x, rep = solve_lp(lp)
    assert rep.status is Status.UNBOUNDED
    ray = np.asarray(rep.certificate["ray"])
    assert float(lp.c @ ray) < -1e-9
    assert np.all(lp.G @ ray <= 1e-9)
    assert np.all(ray >= -1e-9)        # recession direction of x >= 0


def test_crossed_bounds_are_infeasible():
    lp = LinearProgram(c=[1.0], G=np.zeros((0, 1)), h=[],
                       lb=[2.0], ub=[1.0])
    x, rep = solve_lp(lp)
    assert rep.status is Status.INFEASIBLE


def test_degenerate_lp_terminates(rng):
    """Many redundant rows through one vertex; anti-cycling must kick in."""
    for trial in range(15):
        rng_t = np.random.default_rng(trial)
        n = 4
        x0 = np.zeros(n)
        g = rng_t.standard_normal((12, n))
        h = g @ x0          # every row active at the origin
        c = np.abs(rng_t.standard_normal(n))   # bounded: minimized at 0
        lp = LinearProgram(c=c, G=g, h=h, senses=("le",) * 12)
        x, rep = solve_lp(lp)
        assert rep.status is Status.OPTIMAL
        assert rep.objective == pytest.approx(0.0, abs=1e-9)


def test_duals_certify_optimality(rng):
    """Reported duals reproduce the objective (strong duality spot check)."""
    for _ in range(20):
        lp = random_feasible_lp(rng)
        x, rep = solve_lp(lp)
        assert rep.status is Status.OPTIMAL
        assert rep.dual is not None
        y = rep.dual
        # dual feasibility sign conventions per row sense
        for i, s in enumerate(lp.senses):
            if s == "le":
                assert y[i] <= 1e-7
            elif s == "ge":
                assert y[i] >= -1e-7
        assert rep.delta >= -1e-9       # certified gap is nonnegative


def test_maxiter_is_reported(rng):
    lp = random_feasible_lp(rng, n=4, m=8)
    x, rep = solve_lp(lp, maxiter=1)
    assert rep.status in (Status.MAXITER, Status.OPTIMAL)
    if rep.status is Status.MAXITER:
        assert rep.iterations >= 1


def test_report_residuals_small(rng):
    for _ in range(10):
        lp = random_feasible_lp(rng)
        x, rep = solve_lp(lp)
        assert rep.residuals["primal"] <= 1e-7
