"""Generalized forward-backward (here Douglas-Rachford) baseline for
matrix completion over the intersection of a nuclear and an l1 ball.

The objective ``Q(W) = ||Omega W1 - y||_1 + iota_nuc(W2) + iota_l1(W3)`` is
minimized over the diagonal subspace of three stacked ``N x N`` matrices,
with unit step and relaxation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import MaskOperator
from .prox import nuclear_norm, project_l1_ball, project_nuclear_ball, prox_l1


@dataclass(frozen=True)
class MatcompData:
    mask: MaskOperator
    y: np.ndarray
    delta_nuc: float
    delta_l1: float

    @property
    def shape(self):
        return self.mask.in_shape


@dataclass(frozen=True)
class GfbState:
    Z: np.ndarray
    W: np.ndarray
    U: np.ndarray
    U_erg: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, shape) -> "GfbState":
        z = np.zeros((3, *shape))
        return cls(z, z.copy(), z.copy(), z.copy(), 0)


def gfb_step(data: MatcompData, st: GfbState) -> GfbState:
    """One sweep with ``lambda_k = gamma = 1``.

    ``U_erg`` is the running mean of ``U_0 .. U_k`` (``U_0`` included).
    """
    Om = data.mask
    V = 2.0 * st.W - st.Z
    OV = Om(V[0])
    U = np.empty_like(st.Z)
    U[0] = V[0] + Om.adjoint(data.y - OV + prox_l1(1.0, OV - data.y))
    U[1] = project_nuclear_ball(data.delta_nuc, V[1])
    U[2] = project_l1_ball(data.delta_l1, V[2])
    Z = st.Z + U - st.W
    W = np.broadcast_to(Z.mean(axis=0), Z.shape).copy()
    k = st.k + 1
    U_erg = st.U_erg + (U - st.U_erg) / (k + 1)
    return GfbState(Z, W, U, U_erg, k)


def run_gfb(data: MatcompData, iters, state=None, callback=None) -> GfbState:
    st = GfbState.zeros(data.shape) if state is None else state
    for _ in range(iters):
        st = gfb_step(data, st)
        if callback is not None and callback(st):
            break
    return st


def feasibility(data: MatcompData, U):
    """Excess of blocks 2 and 3 over their ball radii (<= 0 means feasible)."""
    return (nuclear_norm(U[1]) - data.delta_nuc,
            float(np.abs(U[2]).sum()) - data.delta_l1)


def objective_Q(data: MatcompData, U, tol=1e-9) -> float:
    """``Q(U)``; indicator blocks count as feasible within ``tol * max(1, radius)``."""
    e_nuc, e_l1 = feasibility(data, U)
    if e_nuc > tol * max(1.0, data.delta_nuc) or e_l1 > tol * max(1.0, data.delta_l1):
        return np.inf
    return float(np.abs(data.mask(U[0]) - data.y).sum())


def gfb_bregman_criterion(data: MatcompData, U_erg, W_star, Z_star, gamma=1.0,
                          tol=1e-9) -> float:
    """``Q(U) - Q(W*) - <v*, U - W*>`` with ``v* = (W* - Z*)/gamma``.

    Returns ``inf`` when ``U_erg`` violates an indicator block beyond ``tol``.
    """
    q = objective_Q(data, U_erg, tol)
    if not np.isfinite(q):
        return np.inf
    q_star = objective_Q(data, W_star, tol)
    if not np.isfinite(q_star):
        raise ValueError("reference W* is infeasible for the ball constraints")
    v = (np.asarray(W_star) - np.asarray(Z_star)) / gamma
    return q - q_star - float(np.vdot(v, U_erg - W_star))
