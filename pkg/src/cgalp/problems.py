"""Seeded generators for the two benchmark problems.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``, whose
stream is fixed across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gfb import MatcompData
from .linalg import LinearMap, MaskOperator
from .oracles import l1_ball, nuclear_ball
from .product import ProductSpec, lift
from .prox import l1_norm, zero_function
from .solver import CompositeProblem


def rng_for(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ProjectionInstance:
    problem: CompositeProblem
    y: np.ndarray
    A: np.ndarray
    u: np.ndarray
    v: np.ndarray


def gen_projection_instance(seed=0) -> ProjectionInstance:
    """Project ``y`` onto ``{||x||_1 <= 1} cap ker(A)`` with ``A = u v^T`` rank one.

    ``y`` is redrawn until it lies outside the ball and outside ``ker(A)``.
    """
    rng = rng_for(seed)
    u = rng.standard_normal(2)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(2)
    v /= np.linalg.norm(v)
    A = np.outer(u, v)
    while True:
        y = rng.uniform(-2.0, 2.0, size=2)
        if np.abs(y).sum() > 1.0 + 1e-3 and np.linalg.norm(A @ y) > 1e-3:
            break
    problem = CompositeProblem(
        f_value=lambda x: 0.5 * float(np.dot(x - y, x - y)),
        f_grad=lambda x: x - y,
        g=zero_function(),
        T=LinearMap.identity(2),
        h=l1_ball(1.0, 2),
        A=LinearMap.from_matrix(A),
        b=np.zeros(2),
    )
    return ProjectionInstance(problem, y, A, u, v)


@dataclass(frozen=True)
class MatcompInstance:
    data: MatcompData
    X0: np.ndarray
    y_tilde: np.ndarray

    @property
    def mask(self):
        return self.data.mask

    @property
    def y(self):
        return self.data.y

    @property
    def delta_nuc(self):
        return self.data.delta_nuc

    @property
    def delta_l1(self):
        return self.data.delta_l1


def gen_matcomp_instance(N=32, density=0.8, seed=0) -> MatcompInstance:
    """Rank-one sparse ground truth observed through a random mask.

    ``floor(N/5)`` entries of ``y~`` are uniform in ``[-1, 1]``; the mask keeps
    ``floor(density N^2)`` entries drawn without replacement;
    ``delta_nuc = ||X0||_* / 2`` and ``delta_l1 = ||X0||_1 / 2``.
    """
    if N < 5:
        raise ValueError("N must be at least 5")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in (0, 1]")
    rng = rng_for(seed)
    y_tilde = np.zeros(N)
    support = rng.choice(N, size=N // 5, replace=False)
    y_tilde[np.sort(support)] = rng.uniform(-1.0, 1.0, size=N // 5)
    X0 = np.outer(y_tilde, y_tilde)
    kept = np.sort(rng.choice(N * N, size=int(np.floor(density * N * N)), replace=False))
    mask = MaskOperator.from_flat(kept, (N, N))
    nuc = float(np.dot(y_tilde, y_tilde))  # ||y y^T||_* = ||y||^2
    data = MatcompData(mask, mask(X0), nuc / 2.0, float(np.abs(X0).sum()) / 2.0)
    return MatcompInstance(data, X0, y_tilde)


def matcomp_spec(data: MatcompData, lmo_tol=1e-9, lmo_max_iters=5000,
                 warm_start=True, dense_after=50) -> ProductSpec:
    """Two-block product form: ``g_i = ||. - y||_1 / 2`` through the mask,
    ``C_1`` the nuclear ball, ``C_2`` the l1 ball, ``f = 0``.

    The nuclear oracle warm-starts its power iteration and falls back to a
    dense SVD after ``dense_after`` steps (``None`` disables the fallback).
    """
    shape = data.shape
    g = l1_norm(0.5, data.y)
    return ProductSpec(
        n=2,
        block_shape=shape,
        h_blocks=[nuclear_ball(data.delta_nuc, shape, tol=lmo_tol, max_iters=lmo_max_iters,
                               warm_start=warm_start, dense_after=dense_after),
                  l1_ball(data.delta_l1, shape)],
        g_blocks=[(g, data.mask), (g, data.mask)],
        name="matcomp",
    )


def matcomp_problem(data: MatcompData, **kw) -> CompositeProblem:
    return lift(matcomp_spec(data, **kw))
