"""Proximal operators, Moreau envelopes and projections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _backend


class ProxInconsistencyError(RuntimeError):
    """A prox returned a point outside the domain of its function."""


@dataclass(frozen=True)
class ProxFriendly:
    """A convex function with a cheap proximal map.

    ``prox(beta, x)`` returns the minimizer of ``value(y) + ||x - y||^2/(2 beta)``.
    ``min_norm_subgrad(x)``, when supplied, is the least-norm element of the
    subdifferential at ``x``.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[float, np.ndarray], np.ndarray]
    min_norm_subgrad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "g"


def prox_l1(beta, x):
    """Soft thresholding: prox of ``beta * ||.||_1``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _backend.kernels.soft_threshold(x, float(beta))


def zero_function() -> ProxFriendly:
    return ProxFriendly(
        value=lambda x: 0.0,
        prox=lambda beta, x: np.array(x, dtype=np.float64),
        min_norm_subgrad=lambda x: np.zeros(np.shape(x)),
        name="zero",
    )


def l1_norm(weight=1.0, shift=None) -> ProxFriendly:
    """``weight * ||x - shift||_1`` (``shift`` defaults to 0)."""
    if weight <= 0:
        raise ValueError("weight must be positive")
    weight = float(weight)
    if shift is None:
        def value(x):
            return weight * float(np.abs(x).sum())

        def prox(beta, x):
            return prox_l1(beta * weight, x)

        def subgrad(x):
            return weight * np.sign(x)
    else:
        shift = np.array(shift, dtype=np.float64)

        def value(x):
            return weight * float(np.abs(x - shift).sum())

        def prox(beta, x):
            return shift + prox_l1(beta * weight, x - shift)

        def subgrad(x):
            return weight * np.sign(x - shift)

    return ProxFriendly(value, prox, subgrad, name="l1")


def _indicator(project, member, name):
    def value(x):
        return 0.0 if member(x) else np.inf

    def subgrad(x):
        if not member(x):
            raise ValueError("subdifferential of an indicator is empty off its set")
        return np.zeros(np.shape(x))

    return ProxFriendly(value, lambda beta, x: project(x), subgrad, name=name)


def indicator_l1_ball(delta, tol=1e-9) -> ProxFriendly:
    return _indicator(lambda x: project_l1_ball(delta, x),
                      lambda x: np.abs(x).sum() <= delta + tol, "l1-ball")


def indicator_nuclear_ball(delta, tol=1e-9) -> ProxFriendly:
    return _indicator(lambda X: project_nuclear_ball(delta, X),
                      lambda X: nuclear_norm(X) <= delta + tol, "nuclear-ball")


def moreau_value(g: ProxFriendly, beta, x) -> float:
    """Moreau envelope ``g^beta(x) = g(p) + ||x - p||^2 / (2 beta)``, ``p = prox``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    p = g.prox(beta, x)
    gp = g.value(p)
    if not np.isfinite(gp):
        raise ProxInconsistencyError(f"prox of {g.name} left its domain")
    d = np.asarray(x, dtype=np.float64) - p
    return gp + float(np.vdot(d, d)) / (2.0 * beta)


def moreau_grad(g: ProxFriendly, beta, x) -> np.ndarray:
    """Gradient ``(x - prox_{beta g}(x)) / beta`` of the envelope; 1/beta-Lipschitz."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = np.asarray(x, dtype=np.float64)
    return (x - g.prox(beta, x)) / beta


def project_l1_ball(delta, x) -> np.ndarray:
    """Euclidean projection onto ``{||x||_1 <= delta}`` (sort and threshold)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return _backend.kernels.project_l1_ball(x, float(delta))


def nuclear_norm(X) -> float:
    return float(np.linalg.svd(np.asarray(X, dtype=np.float64), compute_uv=False).sum())


def project_nuclear_ball(delta, X) -> np.ndarray:
    """Projection onto the nuclear-norm ball: full SVD, then l1-project the spectrum.

    ``numpy.linalg.LinAlgError`` from the SVD propagates.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    X = np.asarray(X, dtype=np.float64)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.sum() <= delta:
        return X.copy()
    s = _backend.kernels.project_l1_ball(s, float(delta))
    return (U * s) @ Vt
