"""Finite-dimensional Hilbert-space primitives.

Vectors are float64 numpy arrays of any shape; the inner product is the
Euclidean one on the flattened entries.  Matrices used as variables (matrix
completion) are simply 2-D vectors in this sense.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _backend


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NonFiniteError(ValueError):
    """A NaN or infinity reached a constructor that forbids it."""


class ConvergenceError(RuntimeError):
    """An iterative routine ran out of iterations.

    The best iterate found so far is kept on ``best`` so the caller can
    decide whether it is good enough.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


def as_vector(x, name="vector") -> np.ndarray:
    """Copy ``x`` to a float64 array, rejecting NaN/Inf entries."""
    arr = np.array(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def as_matrix(M, name="matrix") -> np.ndarray:
    arr = as_vector(M, name)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def inner(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"inner product of shapes {x.shape} and {y.shape}")
    return float(np.vdot(x, y))


def norm(x) -> float:
    return float(np.linalg.norm(np.ravel(x)))


class LinearMap:
    """A bounded linear operator given by its forward and adjoint actions.

    Parameters
    ----------
    forward, adjoint : callable
        ``forward`` maps arrays of ``in_shape`` to ``out_shape``; ``adjoint``
        goes back.  They must satisfy ``<A x, y> = <x, A* y>``.
    in_shape, out_shape : tuple of int or int
    op_norm_bound : float, optional
        Known upper bound on the operator norm.
    """

    def __init__(self, forward: Callable, adjoint: Callable, in_shape, out_shape,
                 op_norm_bound: float | None = None):
        self.forward = forward
        self.adjoint = adjoint
        self.in_shape = _shape(in_shape)
        self.out_shape = _shape(out_shape)
        if op_norm_bound is not None and op_norm_bound < 0:
            raise ValueError("op_norm_bound must be nonnegative")
        self.op_norm_bound = op_norm_bound

    @property
    def in_dim(self) -> int:
        return int(np.prod(self.in_shape))

    @property
    def out_dim(self) -> int:
        return int(np.prod(self.out_shape))

    def __call__(self, x):
        return self.forward(x)

    @property
    def H(self) -> "LinearMap":
        """The adjoint as a LinearMap."""
        return LinearMap(self.adjoint, self.forward, self.out_shape, self.in_shape,
                         self.op_norm_bound)

    def to_dense(self) -> np.ndarray:
        """Dense ``(out_dim, in_dim)`` matrix, built column by column."""
        cols = []
        for j in range(self.in_dim):
            e = np.zeros(self.in_dim)
            e[j] = 1.0
            cols.append(np.ravel(self.forward(e.reshape(self.in_shape))))
        return np.column_stack(cols) if cols else np.zeros((self.out_dim, 0))

    @classmethod
    def from_matrix(cls, M) -> "LinearMap":
        M = as_matrix(M)
        Mt = M.T.copy()
        return cls(lambda x: M @ x, lambda y: Mt @ y, M.shape[1], M.shape[0],
                   float(np.linalg.norm(M, 2)))

    @classmethod
    def identity(cls, shape) -> "LinearMap":
        return cls(_copy, _copy, shape, shape, 1.0)

    @classmethod
    def zero(cls, in_shape, out_shape) -> "LinearMap":
        out_shape = _shape(out_shape)
        in_shape = _shape(in_shape)
        return cls(lambda x: np.zeros(out_shape), lambda y: np.zeros(in_shape),
                   in_shape, out_shape, 0.0)


def _copy(x):
    return np.array(x, dtype=np.float64)


def _shape(s):
    if isinstance(s, (int, np.integer)):
        s = (int(s),)
    s = tuple(int(d) for d in s)
    if not s or any(d < 1 for d in s):
        raise DimensionError(f"invalid shape {s}")
    return s


class MaskOperator(LinearMap):
    """Sampling operator keeping a set of entries of an ``(N, N)`` matrix.

    ``forward`` returns the kept entries in the (row-major sorted) order of
    ``kept_indices``; ``adjoint`` scatters a vector of observations back to
    those positions and leaves zeros elsewhere.
    """

    def __init__(self, kept_indices: Sequence[tuple[int, int]], shape):
        shape = _shape(shape)
        if len(shape) != 2:
            raise DimensionError("mask shape must be 2-D")
        pairs = sorted({(int(r), int(c)) for r, c in kept_indices})
        if len(pairs) != len(kept_indices):
            raise ValueError("kept_indices contains duplicates")
        if not pairs:
            raise ValueError("mask keeps no entries")
        for r, c in pairs:
            if not (0 <= r < shape[0] and 0 <= c < shape[1]):
                raise IndexError(f"mask index {(r, c)} outside {shape}")
        self.kept_indices = pairs
        self.flat_index = np.array([r * shape[1] + c for r, c in pairs], dtype=np.intp)
        flat = self.flat_index
        size = shape[0] * shape[1]

        def forward(X):
            return np.ravel(X)[flat]

        def adjoint(v):
            out = np.zeros(size)
            out[flat] = v
            return out.reshape(shape)

        super().__init__(forward, adjoint, shape, len(pairs), 1.0)

    @classmethod
    def from_flat(cls, flat_indices, shape) -> "MaskOperator":
        shape = _shape(shape)
        return cls([divmod(int(i), shape[1]) for i in flat_indices], shape)


def adjoint_mismatch(A: LinearMap, probes=100, seed=0) -> float:
    """Worst ``|<Ax,y> - <x,A*y>| / (||x|| ||y|| ||A|| + 1)`` over random probes."""
    rng = np.random.default_rng(seed)
    bound = A.op_norm_bound if A.op_norm_bound is not None else operator_norm_estimate(A, 100)
    worst = 0.0
    for _ in range(probes):
        x = rng.standard_normal(A.in_shape)
        y = rng.standard_normal(A.out_shape)
        lhs = inner(A.forward(x), y)
        rhs = inner(x, A.adjoint(y))
        worst = max(worst, abs(lhs - rhs) / (norm(x) * norm(y) * bound + 1.0))
    return worst


class SingularTriplet(NamedTuple):
    sigma: float
    u: np.ndarray
    v: np.ndarray
    iterations: int
    residual: float
    method: str = "power"


def power_svd_top(M, tol=1e-9, max_iters=5000, seed=0, v0=None,
                  dense_after=None) -> SingularTriplet:
    """Leading singular triple of ``M`` by alternating power iteration.

    Stops once ``||M^T u - sigma v|| <= tol * ||M||_F``; ``u = M v / sigma``
    holds exactly at return.  The start vector is ``v0`` if given, else a
    standard normal draw from ``default_rng(seed)``.  If the iterate falls
    into the null space of ``M`` the iteration restarts once from a fresh
    seeded vector.

    Power iteration converges like ``(sigma_2/sigma_1)^(2k)``, which stalls
    on near-ties.  With ``dense_after = m`` an unconverged iteration is
    abandoned after ``m`` steps and the triple is read off a dense SVD
    (``method == "dense"`` in the result).

    Raises
    ------
    ConvergenceError
        No convergence within ``max_iters``; ``err.best`` holds the last triple.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError("power_svd_top expects a 2-D matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    fro = float(np.linalg.norm(M))
    if fro == 0.0:
        raise ValueError("power_svd_top requires a nonzero matrix")
    rng = np.random.default_rng(seed)
    if v0 is None or not np.any(v0):
        v0 = rng.standard_normal(M.shape[1])
    abs_tol = tol * fro
    budget = int(max_iters) if dense_after is None else min(int(max_iters), int(dense_after))
    k = _backend.kernels
    sigma, u, v, it, res, ok = k.power_iteration(M, v0, abs_tol, budget)
    if sigma == 0.0:
        sigma, u, v, it2, res, ok = k.power_iteration(
            M, rng.standard_normal(M.shape[1]), abs_tol, budget)
        it += it2
    if not ok and dense_after is not None:
        U, S, Vt = np.linalg.svd(M)
        u, v = U[:, 0].copy(), Vt[0].copy()
        sigma = float(S[0])
        res = float(np.linalg.norm(M.T @ u - sigma * v))
        return SingularTriplet(sigma, u, v, int(it), res, "dense")
    triplet = SingularTriplet(float(sigma), u, v, int(it), float(res))
    if not ok:
        raise ConvergenceError(
            f"power iteration stopped after {it} iterations with residual "
            f"{res:.3e} > {abs_tol:.3e}", best=triplet)
    return triplet


def operator_norm_estimate(A: LinearMap, iters=50, seed=0) -> float:
    """Power-method lower estimate of ``||A||``.

    The running maximum of ``||A x_j||`` over normalized power iterates of
    ``A* A`` is returned, so the estimate never decreases with ``iters``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x = np.random.default_rng(seed).standard_normal(A.in_shape)
    x /= norm(x)
    best = 0.0
    for _ in range(iters):
        Ax = A.forward(x)
        best = max(best, norm(Ax))
        w = A.adjoint(Ax)
        nw = norm(w)
        if nw == 0.0:
            break
        x = w / nw
    return best
