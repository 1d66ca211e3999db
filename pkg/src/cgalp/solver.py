"""Conditional gradient with augmented Lagrangian and proximal step.

Solves ``min f(x) + g(Tx) + h(x)  s.t.  Ax = b`` where ``f`` is smooth,
``g`` has a cheap prox, and ``h`` has compact domain ``C`` with a linear
minimization oracle.  One iteration:

    y_k     = prox_{beta_k g}(T x_k)
    z_k     = grad f(x_k) + T*(T x_k - y_k)/beta_k + A* mu_k + rho_k A*(A x_k - b)
    s_k     = argmin_s h(s) + <z_k, s>
    x_{k+1} = x_k - gamma_k (x_k - s_k)
    mu_{k+1} = mu_k + theta_k (A x_{k+1} - b)
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import LinearMap, norm, operator_norm_estimate
from .oracles import LmoFriendly
from .prox import ProxFriendly, moreau_value
from .schedule import ParameterSchedule


class SolverError(RuntimeError):
    """An oracle or prox failed inside an iteration."""

    def __init__(self, message, k=None, state=None):
        super().__init__(message)
        self.k = k
        self.state = state


class NonFiniteIterateError(SolverError):
    """NaN/Inf appeared in x, mu or z; ``state`` is the last good state."""


class InfeasibleIterateError(SolverError):
    """An iterate left C (only raised when membership checking is on)."""


@dataclass(frozen=True)
class CompositeProblem:
    f_value: Callable[[np.ndarray], float]
    f_grad: Callable[[np.ndarray], np.ndarray]
    g: ProxFriendly
    T: LinearMap
    h: LmoFriendly
    A: LinearMap
    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if b.shape != self.A.out_shape and b.size != self.A.out_dim:
            raise ValueError(f"b has {b.size} entries, A maps to {self.A.out_dim}")
        object.__setattr__(self, "b", b.reshape(self.A.out_shape))

    def residual(self, x) -> np.ndarray:
        return self.A(x) - self.b

    def objective(self, x) -> float:
        """``Phi(x) = f(x) + g(Tx) + h(x)``."""
        return self.f_value(x) + self.g.value(self.T(x)) + self.h.h(x)


@dataclass(frozen=True)
class SolverState:
    k: int
    x: np.ndarray
    mu: np.ndarray
    gamma_sum: float
    x_erg_feas: np.ndarray
    x_erg_opt: np.ndarray

    @classmethod
    def initial(cls, x0, mu0) -> "SolverState":
        x0 = np.array(x0, dtype=np.float64)
        return cls(0, x0, np.array(mu0, dtype=np.float64), 0.0, x0.copy(), x0.copy())


@dataclass(frozen=True)
class StepTrace:
    k: int
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    feas_gap: float
    lagrangian_at_mustar: Optional[float] = None


@dataclass
class RunResult:
    state: SolverState
    initial: SolverState
    traces: list = field(default_factory=list)
    elapsed: float = 0.0
    stopped_early: bool = False


def gradient_E(p: CompositeProblem, s: ParameterSchedule, k, x, mu, y=None):
    """Gradient in ``x`` of the smoothed augmented Lagrangian at iteration ``k``.

    Passing ``y = prox_{beta_k g}(Tx)`` avoids recomputing the prox.
    """
    beta = s.beta(k)
    Tx = p.T(x)
    if y is None:
        y = p.g.prox(beta, Tx)
    r = p.A(x) - p.b
    return (p.f_grad(x) + p.T.adjoint(Tx - y) / beta + p.A.adjoint(mu)
            + s.rho_of_k(k) * p.A.adjoint(r))


def cgalp_step(p: CompositeProblem, s: ParameterSchedule, st: SolverState):
    """One iteration; returns ``(next_state, trace)``."""
    k = st.k
    x, mu = st.x, st.mu
    gamma = s.gamma(k)
    beta = s.beta(k)
    try:
        Tx = p.T(x)
        y = p.g.prox(beta, Tx)
        r = p.A(x) - p.b
        z = (p.f_grad(x) + p.T.adjoint(Tx - y) / beta + p.A.adjoint(mu)
             + s.rho_of_k(k) * p.A.adjoint(r))
        if not np.all(np.isfinite(z)):
            raise NonFiniteIterateError(f"non-finite gradient at k={k}", k, st)
        sk = p.h.lmo(z)
    except SolverError:
        raise
    except Exception as exc:
        raise SolverError(f"iteration k={k} failed: {exc}", k, st) from exc
    x_new = x - gamma * (x - sk)
    r_new = p.A(x_new) - p.b
    mu_new = mu + s.theta(k) * r_new
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(mu_new))):
        raise NonFiniteIterateError(f"non-finite iterate at k={k}", k, st)
    G = st.gamma_sum + gamma
    w_old = st.gamma_sum / G
    w_new = gamma / G
    nxt = SolverState(
        k + 1, x_new, mu_new, G,
        w_old * st.x_erg_feas + w_new * x,
        w_old * st.x_erg_opt + w_new * x_new,
    )
    return nxt, StepTrace(k, y, z, sk, norm(r_new))


def run(p: CompositeProblem, s: ParameterSchedule, x0=None, mu0=None, max_iters=1000,
        callback=None, trace_stride=0, check_membership=False,
        membership_tol=1e-9) -> RunResult:
    """Run ``max_iters`` iterations from ``(x0, mu0)``.

    ``x0`` defaults to ``h.a_feasible_point`` and ``mu0`` to zero.  ``mu0``
    must lie in the range of ``A``; see :func:`project_onto_range`.

    ``callback(state, trace)`` is called after every step and may return
    True to stop.  Traces are stored every ``trace_stride`` steps (0 keeps
    none).  With ``check_membership`` each new iterate is tested against C.
    """
    x0 = p.h.a_feasible_point if x0 is None else x0
    mu0 = np.zeros(p.A.out_shape) if mu0 is None else mu0
    st = SolverState.initial(x0, mu0)
    result = RunResult(st, st)
    t0 = time.perf_counter()
    for _ in range(max_iters):
        st, tr = cgalp_step(p, s, st)
        if check_membership and not p.h.membership(st.x, membership_tol):
            raise InfeasibleIterateError(f"x_{st.k} left C", st.k, st)
        if trace_stride and tr.k % trace_stride == 0:
            result.traces.append(tr)
        if callback is not None and callback(st, tr):
            result.stopped_early = True
            break
    result.state = st
    result.elapsed = time.perf_counter() - t0
    return result


def lagrangian(p: CompositeProblem, x, mu) -> float:
    """``f(x) + g(Tx) + h(x) + <mu, Ax - b>``; ``+inf`` outside ``C``."""
    hx = p.h.h(x)
    if not np.isfinite(hx):
        return np.inf
    return (p.f_value(x) + p.g.value(p.T(x)) + hx
            + float(np.vdot(mu, p.A(x) - p.b)))


def smoothed_lagrangian(p: CompositeProblem, s: ParameterSchedule, k, x, mu) -> float:
    """Lagrangian with ``g`` replaced by its Moreau envelope of index ``beta_k``
    plus the penalty ``(rho_k/2)||Ax - b||^2``."""
    hx = p.h.h(x)
    if not np.isfinite(hx):
        return np.inf
    r = p.A(x) - p.b
    return (p.f_value(x) + moreau_value(p.g, s.beta(k), p.T(x)) + hx
            + float(np.vdot(mu, r)) + 0.5 * s.rho_of_k(k) * float(np.vdot(r, r)))


def lipschitz_bound(p: CompositeProblem, s: ParameterSchedule, k, T_norm=None, A_norm=None):
    """``L_k = ||T||^2/beta_k + ||A||^2 rho_k``, the Lipschitz constant of the
    smoothing and penalty part of the gradient."""
    if T_norm is None:
        T_norm = p.T.op_norm_bound if p.T.op_norm_bound is not None else operator_norm_estimate(p.T)
    if A_norm is None:
        A_norm = p.A.op_norm_bound if p.A.op_norm_bound is not None else operator_norm_estimate(p.A)
    return T_norm ** 2 / s.beta(k) + A_norm ** 2 * s.rho_of_k(k)


def project_onto_range(A: LinearMap, mu) -> np.ndarray:
    """Least-squares projection of ``mu`` onto ``ran(A)``."""
    M = A.to_dense()
    mu = np.asarray(mu, dtype=np.float64)
    w, *_ = np.linalg.lstsq(M, mu.ravel(), rcond=None)
    return (M @ w).reshape(A.out_shape)


def curvature_estimate(f_value, f_grad, h: LmoFriendly, zeta, samples=1000, seed=0) -> float:
    """Sampled lower bound on the curvature constant of ``(f, C)`` w.r.t. ``zeta``.

    Returns the largest observed ``D_f(x + g(s - x), x) / zeta(g)`` with
    ``D_f`` the Bregman divergence of ``f``.  Points of ``C`` are produced by
    the oracle at Gaussian directions (vertices of ``C``), mixed half of the
    time with a second vertex.  Draws are sequential, so extending
    ``samples`` under a fixed seed can only raise the estimate.
    """
    rng = np.random.default_rng(seed)
    shape = np.shape(h.a_feasible_point)

    def point():
        v = h.lmo(rng.standard_normal(shape))
        if rng.random() < 0.5:
            t = rng.random()
            v = t * v + (1 - t) * h.lmo(rng.standard_normal(shape))
        return v

    best = 0.0
    for _ in range(samples):
        x = point()
        s_pt = point()
        g = 1.0 - rng.random()
        z = x + g * (s_pt - x)
        d = f_value(z) - f_value(x) - float(np.vdot(f_grad(x), z - x))
        zg = zeta(g)
        if zg > 0:
            best = max(best, d / zg)
    return best
