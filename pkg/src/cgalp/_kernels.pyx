# Compiled twins of the functions in _pykernels.py.  Same signatures, same
# tie-breaking, same return conventions.

import numpy as np

from libc.math cimport fabs, sqrt


cdef inline double _norm(double[::1] a) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * a[i]
    return sqrt(s)


def soft_threshold(x, double t):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] xv = arr.ravel()
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double a
    with nogil:
        for i in range(xv.shape[0]):
            a = xv[i]
            if a > t:
                ov[i] = a - t
            elif a < -t:
                ov[i] = a + t
            else:
                ov[i] = 0.0
    return out.reshape(arr.shape)


def project_l1_ball(x, double radius):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] xv = arr.ravel()
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t i, j = 0
    cdef double total = 0.0
    for i in range(n):
        total += fabs(xv[i])
    if total <= radius:
        return arr.copy()
    u_arr = np.sort(np.abs(arr.ravel()))[::-1].copy()
    cdef double[::1] u = u_arr
    cdef double css = 0.0, css_j = 0.0, theta, a
    for i in range(n):
        css += u[i]
        if u[i] * (i + 1.0) > css - radius:
            j = i
            css_j = css
    theta = (css_j - radius) / (j + 1.0)
    out = np.empty(n)
    cdef double[::1] ov = out
    for i in range(n):
        a = fabs(xv[i]) - theta
        if a <= 0.0:
            ov[i] = 0.0
        elif xv[i] > 0.0:
            ov[i] = a
        else:
            ov[i] = -a
    return out.reshape(arr.shape)


def lmo_l1_ball(z, double radius):
    arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] zv = arr.ravel()
    cdef Py_ssize_t i, best = 0
    cdef double m = -1.0
    for i in range(zv.shape[0]):
        if fabs(zv[i]) > m:
            m = fabs(zv[i])
            best = i
    out = np.zeros(zv.shape[0])
    if zv[best] > 0.0:
        out[best] = -radius
    else:
        out[best] = radius
    return out.reshape(arr.shape)


def lmo_box(lo, hi, z):
    cdef double[::1] lv = np.ascontiguousarray(lo, dtype=np.float64).ravel()
    cdef double[::1] hv = np.ascontiguousarray(hi, dtype=np.float64).ravel()
    arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] zv = arr.ravel()
    out = np.empty(zv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(zv.shape[0]):
        ov[i] = lv[i] if zv[i] >= 0.0 else hv[i]
    return out.reshape(arr.shape)


cdef void _matvec(double[:, ::1] M, double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(M.shape[0]):
        s = 0.0
        for j in range(M.shape[1]):
            s += M[i, j] * x[j]
        out[i] = s


cdef void _rmatvec(double[:, ::1] M, double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double xi
    for j in range(M.shape[1]):
        out[j] = 0.0
    for i in range(M.shape[0]):
        xi = x[i]
        for j in range(M.shape[1]):
            out[j] += M[i, j] * xi


def power_iteration(M, v0, double tol, Py_ssize_t max_iters):
    cdef double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef Py_ssize_t m = Mv.shape[0], n = Mv.shape[1]
    v_arr = np.array(v0, dtype=np.float64).ravel()
    u_arr = np.empty(m)
    z_arr = np.empty(n)
    cdef double[::1] v = v_arr
    cdef double[::1] u = u_arr
    cdef double[::1] z = z_arr
    cdef double sigma = 0.0, tau, residual = np.inf, d, nv
    cdef Py_ssize_t i, it = 0
    cdef bint converged = False
    cdef bint stagnated = False
    with nogil:
        nv = _norm(v)
        for i in range(n):
            v[i] /= nv
        while it < max_iters:
            it += 1
            _matvec(Mv, v, u)
            sigma = _norm(u)
            if sigma == 0.0:
                stagnated = True
                break
            for i in range(m):
                u[i] /= sigma
            _rmatvec(Mv, u, z)
            residual = 0.0
            for i in range(n):
                d = z[i] - sigma * v[i]
                residual += d * d
            residual = sqrt(residual)
            tau = _norm(z)
            for i in range(n):
                v[i] = z[i] / tau
            if residual <= tol:
                converged = True
                break
        if not stagnated:
            _matvec(Mv, v, u)
            sigma = _norm(u)
            for i in range(m):
                u[i] /= sigma
            _rmatvec(Mv, u, z)
            residual = 0.0
            for i in range(n):
                d = z[i] - sigma * v[i]
                residual += d * d
            residual = sqrt(residual)
    if stagnated:
        return 0.0, np.zeros(m), v_arr, it, np.inf, False
    return sigma, u_arr, v_arr, it, residual, bool(converged or residual <= tol)
