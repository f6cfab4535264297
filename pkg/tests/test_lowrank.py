"""Low-rank certification chain: rearrangements, the two upper bounds,
candidate certificates, and the universal floor."""

import math

import numpy as np
import pytest

from sparsecert import structures
from sparsecert.certify import badnews_check, certify_lowrank, opt_bar, \
    opt_star
from sparsecert.certify.lowrank import rearrange, theta


def random_operator(rng, p, q):
    return rng.standard_normal((p * q, p * q))


def kron_pair(h, z):
    """kron(h^T, z), the bilinear probe the rearrangements act on."""
    return np.kron(h.T, z)


def test_theta_bilinearity(rng):
    """<Theta[W], kron(h^T, z)> = Tr((W z) h^T) on random triples."""
    for p, q in ((2, 2), (3, 2), (4, 3)):
        for _ in range(35):
            w = random_operator(rng, p, q)
            h = rng.standard_normal((p, q))
            z = rng.standard_normal((p, q))
            wz = (w @ z.ravel()).reshape(p, q)
            lhs = float(np.sum(theta(w, p, q) * kron_pair(h, z)))
            rhs = float(np.trace(wz @ h.T))
            assert lhs == pytest.approx(rhs, abs=1e-10, rel=1e-10)


def test_theta_accepts_callables(rng):
    p = q = 3
    m = rng.standard_normal((p, p))
    dense = theta(lambda z: m @ z, p, q)
    explicit = theta(np.kron(m, np.eye(q)), p, q)
    assert np.allclose(dense, explicit, atol=1e-12)


def test_theta_of_identity_is_a_permutation():
    for p, q in ((2, 2), (3, 4)):
        t = theta(np.eye(p * q), p, q)
        assert set(np.unique(t)) <= {0.0, 1.0}
        assert np.allclose(t @ t.T, np.eye(p * q), atol=1e-14)


def test_rearrangements_hit_their_defining_identities(rng):
    for p, q in ((2, 2), (3, 2), (4, 3)):
        for _ in range(35):
            h = rng.standard_normal((p, q))
            w = rng.standard_normal((p, q))
            u = kron_pair(h, w)
            mp = rearrange(u, "Mprime", p, q)
            assert np.allclose(mp, np.kron(h, w), atol=1e-12)
            md = rearrange(u, "Mdprime", p, q)
            fh = h.ravel()                  # rows stacked
            gw = w.T.ravel()                # columns stacked
            assert np.allclose(md, np.outer(fh, gw), atol=1e-12)


def test_rearrangements_are_entry_bijections(rng):
    p, q = 3, 2
    u = rng.standard_normal((p * q, p * q))
    for which in ("Mprime", "Mdprime"):
        v = rearrange(u, which, p, q)
        assert sorted(v.ravel()) == pytest.approx(sorted(u.ravel()))
        assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(u))
    with pytest.raises(ValueError):
        rearrange(u, "Mtriple", p, q)
    with pytest.raises(ValueError):
        rearrange(np.eye(3), "Mprime", p, q)


def test_mdprime_nuclear_bound_on_extreme_points(rng):
    """Rank-k extreme h gives ||M''(kron(h^T, w))||_nuclear = sqrt(k)."""
    p, q = 4, 3
    for k in (1, 2, 3):
        for _ in range(25):
            gu = np.linalg.qr(rng.standard_normal((p, k)))[0]
            gv = np.linalg.qr(rng.standard_normal((q, k)))[0]
            h = gu @ gv.T                       # k unit singular values
            a = rng.standard_normal(p)
            b = rng.standard_normal(q)
            w = np.outer(a, b)
            w /= np.linalg.norm(w)              # rank one, unit nuclear norm
            md = rearrange(kron_pair(h, w), "Mdprime", p, q)
            nuc = np.linalg.svd(md, compute_uv=False).sum()
            assert nuc <= math.sqrt(k) + 1e-9
            assert nuc == pytest.approx(math.sqrt(k), abs=1e-8)


def test_opt_bar_identity_value():
    for p, q in ((2, 2), (3, 3), (4, 4), (4, 3)):
        for s in (1, 2):
            if 2 * s > p * q:
                continue
            assert opt_bar(np.eye(p * q), s, p, q) == pytest.approx(3.0 * s,
                                                                    abs=1e-9)


def test_opt_star_bracket(rng):
    """sampled primal - tol <= opt_star <= opt_bar + tol."""
    p = q = 3
    for trial in range(6):
        r = np.random.default_rng(trial)
        w = random_operator(r, p, q)
        bar = opt_bar(w, 1, p, q)
        star = opt_star(w, 1, p, q, iters=400)
        assert star <= bar + 1e-6
        sampled = 0.0
        for _ in range(200):
            z = np.outer(r.standard_normal(p), r.standard_normal(q))
            z /= np.linalg.svd(z, compute_uv=False).sum()
            wz = (w @ z.ravel()).reshape(p, q)
            sv = np.linalg.svd(wz, compute_uv=False)
            sampled = max(sampled, float(sv[0] + sv[:2].sum()))
        assert star >= sampled - 1e-6


def test_opt_star_zero_iters_equals_opt_bar(rng):
    p, q = 3, 2
    w = random_operator(np.random.default_rng(1), p, q)
    assert opt_star(w, 1, p, q, iters=0) == pytest.approx(
        opt_bar(w, 1, p, q), abs=1e-9)


def test_opt_star_is_deterministic():
    w = random_operator(np.random.default_rng(5), 3, 3)
    a = opt_star(w, 1, 3, 3, iters=300)
    b = opt_star(w, 1, 3, 3, iters=300)
    assert a == b


def test_opt_level_validation():
    with pytest.raises(ValueError):
        opt_bar(np.eye(4), 0, 2, 2)
    with pytest.raises(ValueError):
        opt_bar(np.eye(4), 1.5, 2, 2)


def test_certify_identity_sensing_is_perfect():
    p = q = 3
    cert = certify_lowrank(np.eye(9), s=1, phi="l1", p=p, q=q, iters=200)
    assert cert.gamma == pytest.approx(0.0, abs=1e-8)
    assert cert.valid
    assert cert.beta == pytest.approx(2.0, abs=1e-9)
    assert cert.exact_beta
    assert cert.details["chosen"] == "pseudoinverse"
    assert cert.identity_residual <= 1e-10


def test_certify_zero_candidate_gives_identity_residual_zero():
    p = q = 2
    a = np.zeros((1, 4))
    cert = certify_lowrank(a, s=1, phi="l1", p=p, q=q, iters=0,
                           h_candidates=[np.zeros((1, 4))])
    # W = Id, so gamma is the box value 3 and beta vanishes
    assert cert.gamma == pytest.approx(3.0, abs=1e-9)
    assert cert.beta == 0.0
    assert not cert.valid
    assert cert.method == "LowRankUBar"
    assert cert.details["chosen"] == "user-0"


def test_certify_star_never_worse_than_bar(rng):
    p, q = 3, 3
    a = np.random.default_rng(4).standard_normal((7, 9))
    c_bar = certify_lowrank(a, s=1, phi="l1", p=p, q=q, iters=0)
    c_star = certify_lowrank(a, s=1, phi="l1", p=p, q=q, iters=400)
    assert c_star.gamma <= c_bar.gamma + 1e-9
    assert c_star.method == "LowRankUStar"
    for cand in c_star.details["candidates"]:
        assert cand["gamma_star"] <= cand["gamma_bar"] + 1e-9


def test_certify_beta_flags_by_phi(rng):
    p, q = 3, 3
    a = np.random.default_rng(4).standard_normal((7, 9))
    c1 = certify_lowrank(a, s=1, phi="l1", p=p, q=q, iters=0)
    assert c1.exact_beta
    ci = certify_lowrank(a, s=1, phi="linf", p=p, q=q, iters=0)
    assert ci.exact_beta          # 7 rows <= 16: exact sign enumeration
    c2 = certify_lowrank(a, s=1, phi="l2", p=p, q=q, iters=0)
    assert not c2.exact_beta
    assert c2.details["sampling_lower_bound"] <= c2.beta + 1e-9


def test_certify_validation():
    with pytest.raises(ValueError):
        certify_lowrank(np.eye(4), s=1, phi="l1")            # p, q missing
    with pytest.raises(ValueError):
        certify_lowrank(np.eye(4), s=1, phi="l1", p=3, q=3)  # 4 != 9
    with pytest.raises(ValueError):
        certify_lowrank(np.eye(4), s=1, phi="l1", p=2, q=2,
                        h_candidates=[np.zeros((2, 3))])
    with pytest.raises(ValueError):
        certify_lowrank(np.eye(4), s=1, phi="l1", p=2, q=2, h_candidates=[])


def test_badnews_floor(rng):
    """The box bound cannot beat min(2s*sqrt(d/pq), sqrt(d))."""
    for trial in range(15):
        r = np.random.default_rng(trial)
        p, q = int(r.integers(2, 5)), int(r.integers(2, 5))
        m = int(r.integers(1, p * q))
        a = r.standard_normal((m, p * q))
        h = r.standard_normal((m, p * q))
        lhs, floor, holds = badnews_check(a, h, 1, p, q)
        assert holds
        assert lhs >= floor - 1e-6
    # injective A: d = 0 and the floor is vacuous
    lhs, floor, holds = badnews_check(np.eye(4), np.eye(4), 1, 2, 2)
    assert floor == 0.0 and holds
