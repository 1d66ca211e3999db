"""Linear minimization oracles over compact convex sets.

Each oracle solves ``argmin_s h(s) + <z, s>``.  Only indicator functions are
shipped, so ``h`` is 0 on the set and the oracle is a linear program over it.
Ties go to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _backend
from .linalg import ConvergenceError, power_svd_top
from .prox import nuclear_norm


@dataclass(frozen=True)
class LmoFriendly:
    """A nonsmooth term ``h`` with compact domain ``C`` and a linear oracle.

    ``value`` defaults to the indicator of ``C`` as decided by ``membership``
    with tolerance ``value_tol``.
    """

    lmo: Callable[[np.ndarray], np.ndarray]
    membership: Callable[[np.ndarray, float], bool]
    diameter_bound: float
    a_feasible_point: np.ndarray
    value: Optional[Callable[[np.ndarray], float]] = None
    value_tol: float = 1e-9
    name: str = "h"

    def h(self, x) -> float:
        if self.value is not None:
            return self.value(x)
        return 0.0 if self.membership(x, self.value_tol) else np.inf


def lmo_l1_ball(delta, z) -> np.ndarray:
    """Vertex ``-delta * sign(z_i) e_i`` with ``i = argmax |z_i|``; ``z = 0`` gives ``+delta e_0``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return _backend.kernels.lmo_l1_ball(z, float(delta))


def lmo_box(lo, hi, z) -> np.ndarray:
    """Corner of ``[lo, hi]`` minimizing ``<z, s>``: ``lo`` where ``z >= 0``, else ``hi``."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(lo > hi):
        raise ValueError("box requires lo <= hi")
    return _backend.kernels.lmo_box(lo, hi, z)


def lmo_nuclear_ball(delta, Z, tol=1e-9, max_iters=5000, seed=0, v0=None,
                     return_v=False, dense_after=None):
    """``-delta u v^T`` from the leading singular pair of ``Z``.

    ``tol`` is relative to ``||Z||_F``.  A power iteration that exhausts
    ``max_iters`` still yields a usable direction, so its best iterate is
    accepted.  ``dense_after`` switches to a dense SVD for slow iterations
    (see :func:`power_svd_top`).  ``Z = 0`` returns the zero matrix.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    Z = np.asarray(Z, dtype=np.float64)
    if not np.any(Z):
        out = np.zeros(Z.shape)
        return (out, None) if return_v else out
    try:
        trip = power_svd_top(Z, tol=tol, max_iters=max_iters, seed=seed, v0=v0,
                             dense_after=dense_after)
    except ConvergenceError as err:
        trip = err.best
    out = -delta * np.outer(trip.u, trip.v)
    return (out, trip.v) if return_v else out


def l1_ball(delta, shape) -> LmoFriendly:
    shape = (int(shape),) if np.isscalar(shape) else tuple(shape)
    return LmoFriendly(
        lmo=lambda z: lmo_l1_ball(delta, z),
        membership=lambda x, tol=1e-9: float(np.abs(x).sum()) <= delta + tol,
        diameter_bound=2.0 * delta,
        a_feasible_point=np.zeros(shape),
        name="l1-ball",
    )


class NuclearBallOracle:
    """Nuclear-norm-ball LMO that optionally warm-starts from its last answer.

    Warm starting keeps runs deterministic (the start vector is a function of
    the iterate history) and cuts power iterations when successive gradient
    matrices are close.  An instance holds state and belongs to a single run.
    """

    def __init__(self, delta, tol=1e-9, max_iters=5000, seed=0, warm_start=False,
                 dense_after=None):
        self.delta = float(delta)
        self.tol = tol
        self.max_iters = max_iters
        self.seed = seed
        self.warm_start = warm_start
        self.dense_after = dense_after
        self._v = None

    def __call__(self, Z):
        out, v = lmo_nuclear_ball(self.delta, Z, self.tol, self.max_iters, self.seed,
                                  v0=self._v if self.warm_start else None, return_v=True,
                                  dense_after=self.dense_after)
        if self.warm_start and v is not None:
            self._v = v
        return out

    def reset(self):
        self._v = None


def nuclear_ball(delta, shape, tol=1e-9, max_iters=5000, seed=0,
                 warm_start=False, dense_after=None) -> LmoFriendly:
    return LmoFriendly(
        lmo=NuclearBallOracle(delta, tol, max_iters, seed, warm_start, dense_after),
        membership=lambda X, tol=1e-9: nuclear_norm(X) <= delta + tol,
        diameter_bound=2.0 * delta,
        a_feasible_point=np.zeros(tuple(shape)),
        name="nuclear-ball",
    )


def box(lo, hi) -> LmoFriendly:
    lo = np.array(lo, dtype=np.float64)
    hi = np.array(hi, dtype=np.float64)
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("box requires matching shapes and lo <= hi")
    return LmoFriendly(
        lmo=lambda z: lmo_box(lo, hi, z),
        membership=lambda x, tol=1e-9: bool(np.all(x >= lo - tol) and np.all(x <= hi + tol)),
        diameter_bound=float(np.linalg.norm(hi - lo)),
        a_feasible_point=(lo + hi) / 2.0,
        name="box",
    )
