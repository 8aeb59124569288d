# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled periodic stencils, total variation and a fused advection driver.

Mirrors :mod:`tdssp._kernels_py` exactly; see that module for the maths.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite

cnp.import_array()


cdef inline Py_ssize_t _wrap(Py_ssize_t j, Py_ssize_t m) noexcept nogil:
    if j >= m:
        return j - m
    if j < 0:
        return j + m
    return j


cdef void _upwind(const double[::1] u, double[::1] out, double scale) noexcept nogil:
    cdef Py_ssize_t m = u.shape[0], j
    for j in range(m):
        out[j] = scale * (u[_wrap(j + 1, m)] - u[j])


cdef void _centered(const double[::1] u, double[::1] out, double scale) noexcept nogil:
    cdef Py_ssize_t m = u.shape[0], j
    for j in range(m):
        out[j] = scale * (u[_wrap(j + 1, m)] - 2.0 * u[j] + u[_wrap(j - 1, m)])


cdef void _squared(const double[::1] u, double[::1] out, double scale) noexcept nogil:
    cdef Py_ssize_t m = u.shape[0], j
    for j in range(m):
        out[j] = scale * (u[_wrap(j + 2, m)] - 2.0 * u[_wrap(j + 1, m)] + u[j])


cdef double _tv(const double[::1] u) noexcept nogil:
    cdef Py_ssize_t m = u.shape[0], j
    cdef double s = 0.0
    for j in range(m):
        s += fabs(u[_wrap(j + 1, m)] - u[j])
    return s


def upwind(const double[::1] u, double scale=1.0):
    out = np.empty(u.shape[0])
    cdef double[::1] o = out
    with nogil:
        _upwind(u, o, scale)
    return out


def centered(const double[::1] u, double scale=1.0):
    out = np.empty(u.shape[0])
    cdef double[::1] o = out
    with nogil:
        _centered(u, o, scale)
    return out


def squared_upwind(const double[::1] u, double scale=1.0):
    out = np.empty(u.shape[0])
    cdef double[::1] o = out
    with nogil:
        _squared(u, o, scale)
    return out


def total_variation(const double[::1] u):
    cdef double s
    with nogil:
        s = _tv(u)
    return s


def advect_tdrk(const double[::1] u0, const double[:, ::1] A, const double[:, ::1] Adot,
                const double[::1] b, const double[::1] bdot, double lam, int squared,
                int n_steps):
    """Run ``n_steps`` of an explicit two-derivative RK method on periodic advection.

    Works in Courant-number units (``dt F = lam * upwind``,
    ``dt^2 Fdot = lam^2 * stencil``).  Returns ``(u, tv)`` where ``tv`` has
    ``n_steps + 1`` entries; stops early (remaining entries NaN) if the state
    becomes non-finite.
    """
    cdef Py_ssize_t m = u0.shape[0], s = b.shape[0], n, i, l, j
    u_arr = np.array(u0, dtype=np.float64)
    y_arr = np.empty(m)
    F_arr = np.empty((s, m))
    G_arr = np.empty((s, m))
    tv_arr = np.full(n_steps + 1, np.nan)
    cdef double[::1] u = u_arr
    cdef double[::1] y = y_arr
    cdef double[:, ::1] F = F_arr
    cdef double[:, ::1] G = G_arr
    cdef double[::1] tv = tv_arr
    cdef double lam2 = lam * lam, acc
    cdef bint finite = True
    with nogil:
        tv[0] = _tv(u)
        for n in range(n_steps):
            for i in range(s):
                for j in range(m):
                    acc = u[j]
                    for l in range(i):
                        acc = acc + A[i, l] * F[l, j] + Adot[i, l] * G[l, j]
                    y[j] = acc
                _upwind(y, F[i], lam)
                if squared:
                    _squared(y, G[i], lam2)
                else:
                    _centered(y, G[i], lam2)
            for j in range(m):
                acc = u[j]
                for l in range(s):
                    acc = acc + b[l] * F[l, j] + bdot[l] * G[l, j]
                u[j] = acc
                if not isfinite(acc):
                    finite = False
            if not finite:
                break
            tv[n + 1] = _tv(u)
    return u_arr, tv_arr
