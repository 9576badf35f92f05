# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of :mod:`srharmonic._kernels_py`."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _ad_star(const double[:, :, ::1] c, double[::1] u, double[::1] lam,
                          double[::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double acc
    for j in range(d):
        acc = 0.0
        for i in range(d):
            if u[i] == 0.0:
                continue
            for k in range(d):
                acc += u[i] * c[i, j, k] * lam[k]
        out[j] = -acc


cdef inline void _bracket(const double[:, :, ::1] c, double[::1] x, double[::1] y,
                          double[::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    for k in range(d):
        out[k] = 0.0
    for i in range(d):
        if x[i] == 0.0:
            continue
        for j in range(d):
            if y[j] == 0.0:
                continue
            for k in range(d):
                out[k] += x[i] * y[j] * c[i, j, k]


cdef inline void _sharp(const double[:, ::1] S, double[::1] lam, double[::1] out,
                        Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    for j in range(d):
        out[j] = 0.0
        for i in range(d):
            out[j] += lam[i] * S[i, j]


def rkmk4_flow(c, sharp_matrix, g0, lam0, double dt, Py_ssize_t steps, controls=None):
    cdef const double[:, :, ::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[:, ::1] S = np.ascontiguousarray(sharp_matrix, dtype=np.float64)
    cdef Py_ssize_t d = cv.shape[0]
    cdef bint use_controls = controls is not None
    cdef const double[:, :, ::1] U
    if use_controls:
        U = np.ascontiguousarray(controls, dtype=np.float64)
    else:
        U = np.zeros((1, 3, d))

    G_arr = np.empty((steps + 1, d))
    L_arr = np.empty((steps + 1, d))
    cdef double[:, ::1] G = G_arr
    cdef double[:, ::1] L = L_arr
    work = np.zeros((16, d))
    cdef double[:, ::1] w = work
    cdef double[::1] g = w[0]
    cdef double[::1] lam = w[1]
    cdef double[::1] u = w[2]
    cdef double[::1] om = w[3]
    cdef double[::1] ls = w[4]
    cdef double[::1] br = w[5]
    cdef double[::1] k1o = w[6]
    cdef double[::1] k2o = w[7]
    cdef double[::1] k3o = w[8]
    cdef double[::1] k4o = w[9]
    cdef double[::1] k1l = w[10]
    cdef double[::1] k2l = w[11]
    cdef double[::1] k3l = w[12]
    cdef double[::1] k4l = w[13]
    cdef double[::1] omega = w[14]
    cdef Py_ssize_t n, j
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0

    for j in range(d):
        g[j] = g0[j]
        lam[j] = lam0[j]
        G[0, j] = g[j]
        L[0, j] = lam[j]

    with nogil:
        for n in range(steps):
            # stage 1 (Omega = 0, so dexp^{-1} is the identity)
            if use_controls:
                for j in range(d):
                    u[j] = U[n, 0, j]
            else:
                _sharp(S, lam, u, d)
            for j in range(d):
                k1o[j] = u[j]
            _ad_star(cv, u, lam, k1l, d)

            # stage 2
            for j in range(d):
                om[j] = half * k1o[j]
                ls[j] = lam[j] + half * k1l[j]
            if use_controls:
                for j in range(d):
                    u[j] = U[n, 1, j]
            else:
                _sharp(S, ls, u, d)
            _bracket(cv, om, u, br, d)
            for j in range(d):
                k2o[j] = u[j] + 0.5 * br[j]
            _ad_star(cv, u, ls, k2l, d)

            # stage 3
            for j in range(d):
                om[j] = half * k2o[j]
                ls[j] = lam[j] + half * k2l[j]
            if use_controls:
                for j in range(d):
                    u[j] = U[n, 1, j]
            else:
                _sharp(S, ls, u, d)
            _bracket(cv, om, u, br, d)
            for j in range(d):
                k3o[j] = u[j] + 0.5 * br[j]
            _ad_star(cv, u, ls, k3l, d)

            # stage 4
            for j in range(d):
                om[j] = dt * k3o[j]
                ls[j] = lam[j] + dt * k3l[j]
            if use_controls:
                for j in range(d):
                    u[j] = U[n, 2, j]
            else:
                _sharp(S, ls, u, d)
            _bracket(cv, om, u, br, d)
            for j in range(d):
                k4o[j] = u[j] + 0.5 * br[j]
            _ad_star(cv, u, ls, k4l, d)

            for j in range(d):
                omega[j] = sixth * (k1o[j] + 2.0 * k2o[j] + 2.0 * k3o[j] + k4o[j])
                lam[j] = lam[j] + sixth * (k1l[j] + 2.0 * k2l[j] + 2.0 * k3l[j] + k4l[j])
            _bracket(cv, g, omega, br, d)
            for j in range(d):
                g[j] = g[j] + omega[j] + 0.5 * br[j]
                G[n + 1, j] = g[j]
                L[n + 1, j] = lam[j]
    return G_arr, L_arr
