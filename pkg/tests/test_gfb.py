import numpy as np
import pytest

from cgalp.bench import decade_medians, fit_rate
from cgalp.gfb import (GfbState, MatcompData, feasibility, gfb_bregman_criterion, gfb_step,
                       objective_Q, run_gfb)
from cgalp.linalg import MaskOperator
from cgalp.problems import matcomp_problem
from cgalp.prox import nuclear_norm, prox_l1
from cgalp.schedule import ParameterSchedule
from cgalp.solver import run


def small_instance():
    yt = np.array([0.8, 0.0, -0.5, 0.0])
    X0 = np.outer(yt, yt)
    mask = MaskOperator.from_flat(np.array([0, 1, 2, 4, 5, 7, 8, 10, 11, 12, 13, 15]), (4, 4))
    return MatcompData(mask, mask(X0), float(yt @ yt) / 2, float(np.abs(X0).sum()) / 2)


@pytest.fixture(scope="module")
def converged():
    d = small_instance()
    return d, run_gfb(d, 20_000)


def test_zero_is_fixed_point_for_zero_data():
    mask = MaskOperator.from_flat(np.arange(10), (4, 4))
    d = MatcompData(mask, np.zeros(10), 1.0, 1.0)
    st = GfbState.zeros((4, 4))
    nxt = gfb_step(d, st)
    assert np.array_equal(nxt.Z, st.Z) and np.array_equal(nxt.U, st.W)


def test_converged_state_is_fixed_point(converged):
    d, st = converged
    nxt = gfb_step(d, st)
    assert np.allclose(nxt.U, st.W, atol=1e-12, rtol=0)
    assert np.allclose(nxt.Z, st.Z, atol=1e-12, rtol=0)


def test_identity_mask_zero_data_is_soft_threshold(rng):
    mask = MaskOperator.from_flat(np.arange(16), (4, 4))
    d = MatcompData(mask, np.zeros(16), 5.0, 5.0)
    for _ in range(20):
        W = np.broadcast_to(rng.standard_normal((4, 4)), (3, 4, 4)).copy()
        Z = rng.standard_normal((3, 4, 4))
        st = GfbState(Z, W, W.copy(), W.copy(), 0)
        nxt = gfb_step(d, st)
        assert np.allclose(nxt.U[0], prox_l1(1.0, 2 * W[0] - Z[0]), atol=1e-15)


def test_updates_follow_displayed_formulas(rng):
    d = small_instance()
    st = run_gfb(d, 7)
    nxt = gfb_step(d, st)
    V = 2 * st.W - st.Z
    assert nuclear_norm(nxt.U[1]) <= d.delta_nuc + 1e-10
    assert np.abs(nxt.U[2]).sum() <= d.delta_l1 + 1e-12
    assert np.allclose(nxt.Z, st.Z + nxt.U - st.W, atol=1e-15)
    assert np.allclose(nxt.W[0], nxt.Z.mean(axis=0), atol=1e-15)
    r = d.mask(V[0]) - d.y
    assert np.allclose(d.mask(nxt.U[0]) - d.y, prox_l1(1.0, r), atol=1e-14)
    unobserved = np.ones((4, 4), bool)
    unobserved.flat[d.mask.flat_index] = False
    assert np.array_equal(nxt.U[0][unobserved], V[0][unobserved])


def test_w_consensus_every_iteration():
    d = small_instance()
    worst = []
    run_gfb(d, 500, callback=lambda st: worst.append(np.abs(st.W - st.W[0]).max()) and False)
    assert max(worst) <= 1e-12


def test_bregman_zero_at_base_point(converged):
    d, st = converged
    assert gfb_bregman_criterion(d, st.W, st.W, st.Z) == 0.0


def test_bregman_nonnegative_on_feasible_points(converged, rng):
    d, st = converged
    worst = np.inf
    for _ in range(1000):
        U = np.empty((3, 4, 4))
        U[0] = rng.standard_normal((4, 4))
        M = rng.standard_normal((4, 4))
        U[1] = M * rng.uniform(0, d.delta_nuc) / nuclear_norm(M)
        M = rng.standard_normal((4, 4))
        U[2] = M * rng.uniform(0, d.delta_l1) / np.abs(M).sum()
        worst = min(worst, gfb_bregman_criterion(d, U, st.W, st.Z))
    assert worst >= -1e-9


def test_bregman_infeasible_sentinel(converged):
    d, st = converged
    U = st.W.copy()
    U[2] *= 1.0 + 1e-3 + d.delta_l1
    U[2] += 1.0
    assert gfb_bregman_criterion(d, U, st.W, st.Z) == np.inf
    assert objective_Q(d, U) == np.inf


def test_small_instance_agrees_with_cgalp():
    # GFB ergodic objective after 10^4 steps against CGALP's 10^5-step objective
    d = small_instance()
    st = run_gfb(d, 10_000)
    e_nuc, e_l1 = feasibility(d, st.U_erg)
    assert e_nuc <= 1e-3 and e_l1 <= 1e-3
    p = matcomp_problem(d)
    r = run(p, ParameterSchedule(a=0, b=0, delta=0.5, rho=15.0, c=1.0), max_iters=100_000)
    assert objective_Q(d, st.U_erg) == pytest.approx(p.objective(r.state.x), abs=1e-3)


def test_bregman_decade_trend(matcomp_run):
    tr = matcomp_run["traces"]["gfb"]
    m = decade_medians(tr["k"], tr["bregman_criterion"])
    assert m[0] >= m[1] >= m[2]


def test_bregman_slope_n32(matcomp_run):
    tr = matcomp_run["traces"]["gfb"]
    fit = fit_rate(tr["k"], tr["bregman_criterion"], 100, 10_000)
    assert -1.3 <= fit.slope <= -0.7
