"""Product-space lifting for several nonsmooth terms or constraint sets.

A problem with blocks ``(g_i, T_i)`` and sets ``C_i`` is rewritten over
``n`` stacked copies of the variable constrained to the diagonal subspace
``V = {x^(1) = ... = x^(n)}``, i.e. ``Pi_{V-perp} x = 0``.  Lifted vectors
have shape ``(n, *block_shape)``.

The space carries the weighted inner product ``(1/n) sum_i <x_i, y_i>``.
Because the weights are uniform, orthogonal projectors onto ``V`` and its
complement coincide with the Euclidean ones; the solver works with the
Euclidean representation in which the lifted gradients read
``(1/n) grad f(x_i) + (Pi mu)_i + rho (Pi x)_i`` block by block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .linalg import DimensionError, LinearMap
from .oracles import LmoFriendly
from .prox import ProxFriendly, zero_function
from .solver import CompositeProblem


class BlockOracleError(RuntimeError):
    def __init__(self, message, block):
        super().__init__(message)
        self.block = block


def weighted_inner(x, y) -> float:
    """Product-space inner product ``(1/n) sum_i <x_i, y_i>``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"shapes {x.shape} and {y.shape}")
    return float(np.vdot(x, y)) / x.shape[0]


def diagonal_projector(n, block_shape) -> LinearMap:
    """``Pi_V``: replace every block by the block mean."""
    shape = (n, *tuple(block_shape))

    def proj(x):
        return np.broadcast_to(np.mean(x, axis=0), shape).copy()

    return LinearMap(proj, proj, shape, shape, 1.0)


def consensus_residual(n, block_shape) -> LinearMap:
    """``Pi_{V-perp}``: subtract the block mean; self-adjoint and idempotent."""
    shape = (n, *tuple(block_shape))

    def proj(x):
        x = np.asarray(x, dtype=np.float64)
        return x - np.mean(x, axis=0)

    return LinearMap(proj, proj, shape, shape, 1.0 if n > 1 else 0.0)


@dataclass(frozen=True)
class ProductSpec:
    """Blocks of a separable problem to be lifted.

    ``g_blocks`` pairs each simple function with its operator (all operators
    share input ``block_shape`` and a common output shape); ``h_blocks`` are
    the sets ``C_i``; ``f_single`` is ``(value, grad)`` applied to every block
    with weight ``1/n`` (``None`` means ``f = 0``).
    """

    n: int
    block_shape: tuple
    h_blocks: Sequence[LmoFriendly]
    g_blocks: Sequence[tuple] = ()
    f_single: Optional[tuple] = None
    name: str = field(default="product")

    def __post_init__(self):
        bs = (int(self.block_shape),) if np.isscalar(self.block_shape) else tuple(self.block_shape)
        object.__setattr__(self, "block_shape", bs)
        if self.n < 1:
            raise ValueError("need at least one block")
        if len(self.h_blocks) != self.n:
            raise DimensionError(f"{len(self.h_blocks)} sets for {self.n} blocks")
        if self.g_blocks and len(self.g_blocks) != self.n:
            raise DimensionError(f"{len(self.g_blocks)} g-blocks for {self.n} blocks")
        for i, h in enumerate(self.h_blocks):
            if np.shape(h.a_feasible_point) != bs:
                raise DimensionError(f"set {i} lives in shape {np.shape(h.a_feasible_point)}, "
                                     f"expected {bs}")
        outs = {T.out_shape for _, T in self.g_blocks}
        ins = {T.in_shape for _, T in self.g_blocks}
        if len(outs) > 1 or (ins and ins != {bs}):
            raise DimensionError("heterogeneous g-block operator shapes")

    @property
    def lifted_shape(self):
        return (self.n, *self.block_shape)


def blockwise_lmo(spec: ProductSpec, z_lifted) -> np.ndarray:
    """Apply each block's oracle to its slice of ``z``."""
    z = np.asarray(z_lifted, dtype=np.float64)
    if z.size != spec.n * int(np.prod(spec.block_shape)):
        raise DimensionError(f"lifted direction has {z.size} entries")
    z = z.reshape(spec.lifted_shape)
    out = np.empty(spec.lifted_shape)
    for i, h in enumerate(spec.h_blocks):
        try:
            out[i] = h.lmo(z[i])
        except Exception as exc:
            raise BlockOracleError(f"oracle of block {i} ({h.name}) failed: {exc}", i) from exc
    return out


def _lift_h(spec: ProductSpec) -> LmoFriendly:
    blocks = spec.h_blocks

    def member(x, tol=1e-9):
        return all(h.membership(x[i], tol) for i, h in enumerate(blocks))

    def value(x):
        return float(sum(h.h(x[i]) for i, h in enumerate(blocks)))

    return LmoFriendly(
        lmo=lambda z: blockwise_lmo(spec, z),
        membership=member,
        diameter_bound=float(np.sqrt(sum(h.diameter_bound ** 2 for h in blocks))),
        a_feasible_point=np.stack([np.asarray(h.a_feasible_point, dtype=np.float64)
                                   for h in blocks]),
        value=value,
        name="product(" + ",".join(h.name for h in blocks) + ")",
    )


def _lift_g(spec: ProductSpec):
    if not spec.g_blocks:
        return zero_function(), LinearMap.identity(spec.lifted_shape)
    gs = [g for g, _ in spec.g_blocks]
    Ts = [T for _, T in spec.g_blocks]
    out_shape = (spec.n, *Ts[0].out_shape)

    def forward(x):
        return np.stack([T.forward(x[i]) for i, T in enumerate(Ts)])

    def adjoint(v):
        return np.stack([T.adjoint(v[i]) for i, T in enumerate(Ts)])

    bounds = [T.op_norm_bound for T in Ts]
    T_lift = LinearMap(forward, adjoint, spec.lifted_shape, out_shape,
                       None if any(b is None for b in bounds) else max(bounds))

    def value(v):
        return float(sum(g.value(v[i]) for i, g in enumerate(gs)))

    def prox(beta, v):
        return np.stack([g.prox(beta, v[i]) for i, g in enumerate(gs)])

    subs = [g.min_norm_subgrad for g in gs]

    def stacked_subgrad(v):
        return np.stack([sg(v[i]) for i, sg in enumerate(subs)])

    subgrad = stacked_subgrad if all(sg is not None for sg in subs) else None

    return ProxFriendly(value, prox, subgrad, name="sum(" + ",".join(g.name for g in gs) + ")"), T_lift


def lift(spec: ProductSpec) -> CompositeProblem:
    """Rewrite the blocked problem as a single constrained problem.

    ``F(x) = (1/n) sum f(x_i)``, ``G = sum g_i`` over the block-diagonal
    ``T``, ``H = sum iota_{C_i}``, ``A = Pi_{V-perp}``, ``b = 0``.
    """
    n = spec.n
    if spec.f_single is None:
        def F(x):
            return 0.0

        def gradF(x):
            return np.zeros(spec.lifted_shape)
    else:
        f, df = spec.f_single

        def F(x):
            return sum(f(x[i]) for i in range(n)) / n

        def gradF(x):
            return np.stack([df(x[i]) for i in range(n)]) / n

    g, T = _lift_g(spec)
    A = consensus_residual(n, spec.block_shape)
    return CompositeProblem(F, gradF, g, T, _lift_h(spec), A, np.zeros(spec.lifted_shape))
