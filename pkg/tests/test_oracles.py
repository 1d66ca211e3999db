import numpy as np
import pytest

from cgalp.oracles import (NuclearBallOracle, box, l1_ball, lmo_box, lmo_l1_ball,
                           lmo_nuclear_ball, nuclear_ball)
from cgalp.prox import nuclear_norm
from refimpl import box_corners, brute_lmo, jacobi_svd, l1_vertices


def test_l1_lmo_examples(backend):
    assert np.array_equal(lmo_l1_ball(1, np.array([3.0, -1.0])), [-1.0, 0.0])
    assert np.array_equal(lmo_l1_ball(2, np.array([0.0, -5.0])), [0.0, 2.0])
    assert np.array_equal(lmo_l1_ball(1, np.zeros(3)), [1.0, 0.0, 0.0])
    assert np.array_equal(lmo_l1_ball(1, np.array([-2.0, 2.0])), [1.0, 0.0])


@pytest.mark.parametrize("n", range(1, 9))
def test_l1_lmo_vertex_enumeration(backend, n):
    rng = np.random.default_rng(n)
    verts = l1_vertices(n, 1.3)
    for _ in range(200):
        z = rng.standard_normal(n)
        s = lmo_l1_ball(1.3, z)
        assert float(z @ s) == pytest.approx(brute_lmo(verts, z), abs=1e-12)
        assert any(np.array_equal(s, v) for v in verts)


def test_box_lmo_examples(backend):
    assert np.array_equal(lmo_box([0, 0], [1, 1], np.array([1.0, -1.0])), [0.0, 1.0])
    lo = np.array([0.3, -2.0])
    for z in (np.array([1.0, -1.0]), np.zeros(2), np.array([-5.0, 7.0])):
        assert np.array_equal(lmo_box(lo, lo, z), lo)
    assert np.array_equal(lmo_box([0, 0], [1, 1], np.zeros(2)), [0.0, 0.0])
    with pytest.raises(ValueError):
        lmo_box([1.0], [0.0], np.ones(1))


@pytest.mark.parametrize("n", range(1, 9))
def test_box_lmo_corner_enumeration(backend, n):
    rng = np.random.default_rng(100 + n)
    for _ in range(50):
        a, b = rng.standard_normal(n), rng.standard_normal(n)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        z = rng.standard_normal(n)
        s = lmo_box(lo, hi, z)
        assert float(z @ s) == pytest.approx(brute_lmo(box_corners(lo, hi), z), abs=1e-12)


def test_lmo_scaling_invariance(backend, rng):
    for _ in range(100):
        z = rng.standard_normal(6)
        c = rng.uniform(1e-3, 1e3)
        assert np.array_equal(lmo_l1_ball(1.0, c * z), lmo_l1_ball(1.0, z))
        lo, hi = -np.ones(6), np.arange(6.0)
        assert np.array_equal(lmo_box(lo, hi, c * z), lmo_box(lo, hi, z))


def test_nuclear_lmo_examples():
    S = lmo_nuclear_ball(1, np.diag([2.0, 1.0]))
    assert np.allclose(S, -np.outer([1, 0], [1, 0]), atol=1e-9)
    rng = np.random.default_rng(3)
    a = rng.standard_normal(4)
    a /= np.linalg.norm(a)
    b = rng.standard_normal(5)
    b /= np.linalg.norm(b)
    assert np.allclose(lmo_nuclear_ball(3, np.outer(a, b)), -3 * np.outer(a, b), atol=1e-10)
    assert np.array_equal(lmo_nuclear_ball(1, np.zeros((3, 3))), np.zeros((3, 3)))


def test_nuclear_lmo_against_svd_oracle(backend, rng):
    for _ in range(20):
        Z = rng.standard_normal((6, 6))
        S = lmo_nuclear_ball(1.0, Z)
        sigma = jacobi_svd(Z)[1][0]
        assert float(np.vdot(Z, S)) == pytest.approx(-sigma, abs=1e-6)
        assert nuclear_norm(S) == pytest.approx(1.0, abs=1e-10)


def test_nuclear_oracle_warm_start_and_fallback(rng):
    Z = rng.standard_normal((5, 5))
    o = NuclearBallOracle(2.0, warm_start=True)
    a = o(Z)
    b = o(Z + 1e-3 * rng.standard_normal((5, 5)))
    assert nuclear_norm(b) == pytest.approx(2.0, abs=1e-10)
    o.reset()
    assert np.allclose(o(Z), a, atol=1e-8)
    near_tie = np.diag([1.0, 1.0 - 1e-12, 0.2])
    S = lmo_nuclear_ball(1.0, near_tie, max_iters=5, dense_after=5)
    assert float(np.vdot(near_tie, S)) == pytest.approx(-1.0, abs=1e-12)


ORACLES = {
    "l1": (l1_ball(1.5, 6), lambda rng: rng.standard_normal(6)),
    "box": (box(-np.ones(4), np.array([0.5, 1, 2, 3.0])), lambda rng: rng.standard_normal(4)),
    "nuclear": (nuclear_ball(2.0, (4, 4)), lambda rng: rng.standard_normal((4, 4))),
}


def _random_member(name, rng):
    if name == "l1":
        v = rng.standard_normal(6)
        return v * rng.uniform(0, 1.5) / np.abs(v).sum()
    if name == "box":
        return rng.uniform(-np.ones(4), np.array([0.5, 1, 2, 3.0]))
    V = rng.standard_normal((4, 4))
    return V * rng.uniform(0, 2.0) / nuclear_norm(V)


@pytest.mark.parametrize("name", list(ORACLES))
def test_lmo_feasible_and_optimal(backend, name):
    h, draw = ORACLES[name]
    rng = np.random.default_rng(len(name))
    for _ in range(1000):
        z = draw(rng)
        s = h.lmo(z)
        assert h.membership(s, 1e-9)
        assert h.h(s) == 0.0
    z = draw(rng)
    s = h.lmo(z)
    for _ in range(1000):
        t = _random_member(name, rng)
        assert float(np.vdot(z, s)) + h.h(s) <= float(np.vdot(z, t)) + h.h(t) + 1e-9


@pytest.mark.parametrize("name", list(ORACLES))
def test_oracle_metadata(name):
    h, _ = ORACLES[name]
    assert h.membership(h.a_feasible_point, 1e-9)
    assert h.diameter_bound > 0
    assert h.h(100 * np.ones(np.shape(h.a_feasible_point))) == np.inf
