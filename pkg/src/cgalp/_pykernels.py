"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Inputs are float64 arrays; outputs are freshly allocated.
"""

import numpy as np


def soft_threshold(x, t):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def project_l1_ball(x, radius):
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    a = np.abs(flat)
    if a.sum() <= radius:
        return x.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, u.size + 1)
    # last j with u_j > (css_j - r)/(j+1); u is sorted so the condition is a prefix
    j = np.nonzero(u * ks > css - radius)[0][-1]
    theta = (css[j] - radius) / (j + 1.0)
    w = np.maximum(a - theta, 0.0)
    return (np.sign(flat) * w).reshape(x.shape)


def lmo_l1_ball(z, radius):
    z = np.asarray(z, dtype=np.float64)
    flat = z.ravel()
    out = np.zeros(flat.size)
    i = int(np.argmax(np.abs(flat)))
    out[i] = -radius * np.sign(flat[i]) if flat[i] != 0.0 else radius
    return out.reshape(z.shape)


def lmo_box(lo, hi, z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(z >= 0.0, lo, hi).astype(np.float64)


def power_iteration(M, v0, tol, max_iters):
    """Alternating power iteration for the top singular triple of ``M``.

    Returns ``(sigma, u, v, iterations, residual, converged)`` where the
    residual is ``||M^T u - sigma v||`` at the returned triple and
    ``u = M v / ||M v||`` holds exactly.  ``sigma == 0`` signals stagnation
    (the iterate fell into the null space).
    """
    M = np.asarray(M, dtype=np.float64)
    v = np.asarray(v0, dtype=np.float64).copy()
    v /= np.linalg.norm(v)
    residual = np.inf
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        w = M @ v
        sigma = np.linalg.norm(w)
        if sigma == 0.0:
            return 0.0, np.zeros(M.shape[0]), v, it, np.inf, False
        u = w / sigma
        z = M.T @ u
        residual = np.linalg.norm(z - sigma * v)
        tau = np.linalg.norm(z)
        v = z / tau
        if residual <= tol:
            converged = True
            break
    w = M @ v
    sigma = np.linalg.norm(w)
    u = w / sigma
    residual = np.linalg.norm(M.T @ u - sigma * v)
    return sigma, u, v, it, residual, converged or bool(residual <= tol)
