"""Norms, duals, seminorms, induced norms, prox maps."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from sparsecert import norms, structures
from sparsecert.norms import (UnsupportedNormError, dual_tag, induced_norm,
                              omega, pi_s, project_ball, prox_structure_norm,
                              prox_vector_norm, ps_seminorm, sigma_sum,
                              soft_threshold, structure_norm, sum_top,
                              svd_descending, vector_norm)

from oracles import pi_s_oracle, ps_oracle, top_sum_oracle

finite_floats = st_.floats(-1e6, 1e6, allow_nan=False)


def test_vector_norms_match_numpy(rng):
    v = rng.standard_normal(11)
    assert vector_norm(v, "l1") == pytest.approx(np.linalg.norm(v, 1))
    assert vector_norm(v, "l2") == pytest.approx(np.linalg.norm(v))
    assert vector_norm(v, "linf") == pytest.approx(np.linalg.norm(v, np.inf))
    assert vector_norm([], "linf") == 0.0
    with pytest.raises(UnsupportedNormError):
        vector_norm(v, "l0")


def test_dual_tags():
    assert dual_tag("l1") == "linf" and dual_tag("linf") == "l1"
    assert dual_tag("l2") == "l2"
    assert dual_tag("nuclear") == "spectral"
    with pytest.raises(UnsupportedNormError):
        dual_tag("huber")


def test_svd_descending_is_deterministic(rng):
    m = rng.standard_normal((5, 4))
    u1, s1, v1 = svd_descending(m)
    u2, s2, v2 = svd_descending(m.copy())
    assert np.array_equal(u1, u2) and np.array_equal(v1, v2)
    assert np.all(np.diff(s1) <= 0)
    assert np.allclose((u1 * s1) @ v1, m, atol=1e-12)
    # sign convention: first sizable entry of each left vector nonnegative
    for j in range(u1.shape[1]):
        nz = np.nonzero(np.abs(u1[:, j]) > 1e-12)[0]
        assert u1[nz[0], j] >= 0


def test_sum_top_against_enumeration(rng):
    for _ in range(30):
        x = rng.standard_normal(rng.integers(1, 13))
        for s in (1, 2, 5, 20):
            assert sum_top(x, s) == pytest.approx(top_sum_oracle(x, s),
                                                  abs=1e-12)
    with pytest.raises(ValueError):
        sum_top(x, 0)


def test_sigma_sum(rng):
    m = rng.standard_normal((4, 6))
    sv = np.linalg.svd(m, compute_uv=False)
    assert sigma_sum(m, 2) == pytest.approx(sv[:2].sum(), abs=1e-9)
    assert sigma_sum(m, 99) == pytest.approx(sv.sum(), abs=1e-9)


def test_pi_s_exact_matches_enumeration(rng):
    for _ in range(25):
        k = int(rng.integers(1, 9))
        u = rng.standard_normal(k)
        chi = rng.integers(1, 4, size=k).astype(float)
        for s in (0.0, 1.0, 2.0, 3.5, 10.0):
            assert pi_s(u, chi, s) == pytest.approx(pi_s_oracle(u, chi, s),
                                                    abs=1e-12)


def test_pi_s_real_weights_branch_and_bound(rng):
    for _ in range(25):
        k = int(rng.integers(1, 8))
        u = rng.standard_normal(k)
        chi = rng.uniform(0.3, 2.5, size=k)
        s = float(rng.uniform(0.5, 3.0))
        assert pi_s(u, chi, s) == pytest.approx(pi_s_oracle(u, chi, s),
                                                abs=1e-10)


def test_pi_s_hat_dominates_exact(rng):
    for _ in range(50):
        k = int(rng.integers(1, 9))
        u = rng.standard_normal(k)
        chi = rng.integers(1, 4, size=k).astype(float)
        s = float(rng.integers(0, 7))
        exact = pi_s(u, chi, s)
        hat = pi_s(u, chi, s, variant="hat")
        assert hat >= exact - 1e-10
        if np.all(chi == 1.0):
            assert hat == pytest.approx(exact, abs=1e-10)


def test_pi_s_nonint_weights_blocked_above_25():
    u = np.ones(26)
    chi = np.full(26, 1.5)
    with pytest.raises(UnsupportedNormError):
        pi_s(u, chi, 3.0)
    assert pi_s(u, chi, 3.0, variant="hat") > 0.0


def test_structure_norms(rng):
    pl, _ = structures.build_plain(6)
    v = rng.standard_normal(6)
    assert structure_norm(pl, v) == pytest.approx(np.abs(v).sum())
    assert structure_norm(pl, v, dual=True) == pytest.approx(np.abs(v).max())

    gr, rep = structures.build_group([(0, 1), (1, 2)],
                                     block_norm=["l2", "linf"])
    w = rep.apply(rng.standard_normal(3))
    expect = np.linalg.norm(w[:2]) + np.abs(w[2:]).max()
    assert structure_norm(gr, w) == pytest.approx(expect)
    expect_dual = max(np.linalg.norm(w[:2]), np.abs(w[2:]).sum())
    assert structure_norm(gr, w, dual=True) == pytest.approx(expect_dual)

    lr, _ = structures.build_lowrank(3, 4)
    m = rng.standard_normal((4, 3))
    sv = np.linalg.svd(m, compute_uv=False)
    assert structure_norm(lr, m.ravel()) == pytest.approx(sv.sum())
    assert structure_norm(lr, m.ravel(), dual=True) == pytest.approx(sv[0])


def test_holder_inequality_everywhere(rng):
    structs = (structures.build_plain(7)[0],
               structures.build_group([(0, 1, 2), (3, 4), (5, 6)],
                                      block_norm=["l1", "l2", "linf"])[0],
               structures.build_lowrank(3, 3)[0])
    for st in structs:
        for _ in range(100):
            f = rng.standard_normal(st.ambient_dim_e)
            w = rng.standard_normal(st.ambient_dim_e)
            assert f @ w <= structure_norm(st, f, dual=True) * \
                structure_norm(st, w) + 1e-9


def test_duality_by_sampling(rng):
    """max over unit-dual-ball candidates of <f,w> recovers ||w||.

    200 random directions establish the sampled lower bound; the analytic
    subdifferential witness (sign vector / outer product of singular bases)
    is added so the max is tight, not just close.
    """
    pl, _ = structures.build_plain(6)
    lr, _ = structures.build_lowrank(3, 3)
    for st in (pl, lr):
        w = rng.standard_normal(st.ambient_dim_e)
        target = structure_norm(st, w)
        if st.kind == "plain":
            witness = np.sign(w)
        else:
            u, _, vt = np.linalg.svd(w.reshape(3, 3))
            witness = (u @ vt).ravel()
        cands = [witness] + [rng.standard_normal(st.ambient_dim_e)
                             for _ in range(200)]
        best = max(float(f @ w) / structure_norm(st, f, dual=True)
                   for f in cands)
        assert best <= target + 1e-9
        assert best >= 0.95 * target


@given(st_.lists(finite_floats, min_size=1, max_size=10),
       st_.lists(finite_floats, min_size=1, max_size=10),
       st_.sampled_from(["l1", "l2", "linf"]))
@settings(max_examples=200, deadline=None)
def test_norm_axioms_hypothesis(xs, ys, tag):
    n = min(len(xs), len(ys))
    x = np.array(xs[:n])
    y = np.array(ys[:n])
    nx = vector_norm(x, tag)
    assert vector_norm(-2.5 * x, tag) == pytest.approx(2.5 * nx, rel=1e-12,
                                                       abs=1e-9)
    assert vector_norm(x + y, tag) <= nx + vector_norm(y, tag) + 1e-9


def test_ps_seminorm_against_enumeration(rng):
    pl, _ = structures.build_plain(8)
    gr, _ = structures.build_group([(0, 1, 2), (2, 3), (4, 5, 6), (6, 7)],
                                   weights=[1, 2, 1, 1])
    lr, _ = structures.build_lowrank(3, 4)
    for _ in range(20):
        z = rng.standard_normal(8)
        for s in (0.5, 1, 2, 8):
            assert ps_seminorm(pl, z, s) == pytest.approx(
                ps_oracle(pl, z, s), abs=1e-12)
        w = rng.standard_normal(gr.ambient_dim_e)
        for s in (0, 1, 2, 5):
            assert ps_seminorm(gr, w, s) == pytest.approx(
                ps_oracle(gr, w, s), abs=1e-12)
        m = rng.standard_normal(12)
        for s in (1, 2):
            assert ps_seminorm(lr, m, s) == pytest.approx(
                ps_oracle(lr, m, s), abs=1e-9)


def test_ps_seminorm_fixed_point():
    # rows (1,2) and (3,0): top singular values are sqrt(10) and sqrt(5)
    lr, _ = structures.build_lowrank(2, 2)
    z = np.array([[1.0, 2.0], [3.0, 0.0]])
    sv = np.linalg.svd(z, compute_uv=False)
    assert ps_seminorm(lr, z.ravel(), 1) == pytest.approx(sv[0] + sv.sum(),
                                                          abs=1e-12)


def test_induced_norm_exact_cases(rng):
    q = rng.standard_normal((4, 5))
    val, exact = induced_norm(q, "l1", "l2")
    assert exact
    assert val == pytest.approx(max(np.linalg.norm(q[:, j])
                                    for j in range(5)))
    val, exact = induced_norm(q, "l2", "linf")
    assert exact
    assert val == pytest.approx(max(np.linalg.norm(q[i]) for i in range(4)))
    val, exact = induced_norm(q, "l2", "l2")
    assert exact
    assert val == pytest.approx(np.linalg.svd(q, compute_uv=False)[0])
    # 1x1 blocks are always exact
    val, exact = induced_norm(np.array([[-3.0]]), "linf", "l1")
    assert exact and val == 3.0


def test_induced_norm_hard_cases_are_upper_bounds(rng):
    """Sampled lower bounds never exceed the returned value."""
    for from_tag, to_tag in (("linf", "l1"), ("linf", "l2"), ("l2", "l1")):
        for _ in range(10):
            q = rng.standard_normal((3, 4))
            val, exact = induced_norm(q, from_tag, to_tag)
            assert not exact
            sampled = 0.0
            for _ in range(300):
                x = rng.standard_normal(4)
                x = np.sign(x) if from_tag == "linf" else \
                    x / np.linalg.norm(x)
                sampled = max(sampled,
                              vector_norm(q @ x, to_tag))
            assert val >= sampled - 1e-9


def test_omega_blocks(rng):
    gr, _ = structures.build_group([(0, 1), (2, 3, 4)], block_norm="l1")
    w = rng.standard_normal((5, 5))
    out, exact = omega(gr, w)
    assert out.shape == (2, 2) and exact.all()   # l1 -> l1 is exact
    # entry (i, j) bounds block (i, j) acting from block j's norm
    val, _ = induced_norm(w[:2, 2:], "l1", "l1")
    assert out[0, 1] == pytest.approx(val)
    with pytest.raises(ValueError):
        omega(structures.build_plain(3)[0], np.eye(3))


def test_soft_threshold_and_l1_projection(rng):
    v = np.array([3.0, -1.0, 0.2])
    assert np.allclose(soft_threshold(v, 1.0), [2.0, 0.0, 0.0])
    for _ in range(100):
        x = rng.standard_normal(8) * 3
        r = float(rng.uniform(0.1, 5))
        p = norms.project_l1_ball(x, r)
        assert np.abs(p).sum() <= r + 1e-10
        # no feasible point is closer
        for _ in range(20):
            c = rng.standard_normal(8)
            c = c / np.abs(c).sum() * r * rng.uniform(0, 1)
            assert np.linalg.norm(p - x) <= np.linalg.norm(c - x) + 1e-8


def test_project_ball_feasibility_and_optimality(rng):
    for phi in ("l1", "l2", "linf"):
        for _ in range(40):
            v = rng.standard_normal(6) * 2
            r = float(rng.uniform(0.2, 3))
            out = project_ball(v, phi, r)
            assert vector_norm(out, phi) <= r + 1e-10
            for _ in range(25):
                c = rng.standard_normal(6)
                nc = vector_norm(c, phi)
                if nc > r:
                    c *= (r / nc) * rng.uniform(0, 1)
                assert np.linalg.norm(out - v) <= \
                    np.linalg.norm(c - v) + 1e-8


def test_prox_vector_norm_optimality(rng):
    for tag in ("l1", "l2", "linf"):
        for _ in range(30):
            v = rng.standard_normal(7)
            tau = float(rng.uniform(0.05, 2))
            u = prox_vector_norm(v, tag, tau)
            val = tau * vector_norm(u, tag) + 0.5 * np.sum((u - v) ** 2)
            for _ in range(100):
                c = u + rng.standard_normal(7) * rng.uniform(0.01, 1)
                cand = tau * vector_norm(c, tag) + 0.5 * np.sum((c - v) ** 2)
                assert cand >= val - 1e-8


def test_prox_structure_norm_all_kinds(rng):
    pl, _ = structures.build_plain(5)
    v = rng.standard_normal(5)
    assert np.allclose(prox_structure_norm(pl, v, 0.3),
                       soft_threshold(v, 0.3))

    gr, _ = structures.build_group([(0, 1), (2, 3)], block_norm="l2")
    w = rng.standard_normal(4)
    got = prox_structure_norm(gr, w, 0.4)
    for blk in (slice(0, 2), slice(2, 4)):
        nb = np.linalg.norm(w[blk])
        expect = np.zeros(2) if nb <= 0.4 else w[blk] * (1 - 0.4 / nb)
        assert np.allclose(got[blk], expect)

    lr, _ = structures.build_lowrank(3, 3)
    m = rng.standard_normal((3, 3))
    got = prox_structure_norm(lr, m, 0.5)
    u, sv, vt = np.linalg.svd(m)
    expect = (u * np.maximum(sv - 0.5, 0.0)) @ vt
    assert np.allclose(got, expect, atol=1e-9)
    # prox optimality in the matrix setting
    val = 0.5 * np.linalg.svd(got, compute_uv=False).sum() \
        + 0.5 * np.sum((got - m) ** 2)
    for _ in range(50):
        c = got + rng.standard_normal((3, 3)) * 0.3
        cand = 0.5 * np.linalg.svd(c, compute_uv=False).sum() \
            + 0.5 * np.sum((c - m) ** 2)
        assert cand >= val - 1e-8
