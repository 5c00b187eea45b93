# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for covariance assembly.

Same contract as ``gpbo._core._ref``; see that module for conventions.
The value/gradient routines fuse the distance, kernel and per-parameter
gradient loops into one pass over the upper triangle, which is what makes
log-likelihood gradients cheap inside samplers.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double SQRT5 = sqrt(5.0)


cdef inline double _sqdist_row(const double* xi, const double* xj,
                               const double* inv_ell2, Py_ssize_t d) nogil:
    cdef double u = 0.0
    cdef double t
    cdef Py_ssize_t k
    for k in range(d):
        t = xi[k] - xj[k]
        u += t * t * inv_ell2[k]
    if u < 0.0:
        u = 0.0
    return u


def lml_grad_contract(const double[:, :] ainv, const double[::1] alpha,
                      const double[:, :, ::1] G):
    """Gradient contractions 0.5*sum(W o G_c), W = alpha alpha^T - A^{-1}.

    Only the lower triangle of ``ainv`` is read (LAPACK potri layout).
    Returns (per-channel contractions, trace(W)).
    """
    cdef Py_ssize_t P = G.shape[0], n = G.shape[1]
    cdef Py_ssize_t c, i, j
    cdef double s, w, trace_w = 0.0
    grad_arr = np.empty(P)
    cdef double[::1] grad = grad_arr
    for i in range(n):
        trace_w += alpha[i] * alpha[i] - ainv[i, i]
    for c in range(P):
        s = 0.0
        for i in range(n):
            s += G[c, i, i] * (alpha[i] * alpha[i] - ainv[i, i])
            for j in range(i):
                w = alpha[i] * alpha[j] - ainv[i, j]
                s += 2.0 * G[c, i, j] * w
        grad[c] = 0.5 * s
    return grad_arr, trace_w


def se_matrix(const double[:, ::1] X, const double[::1] ell, double sf2):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double u
    K_arr = np.empty((n, n))
    cdef double[:, ::1] K = K_arr
    inv_arr = np.empty(d)
    cdef double[::1] inv_ell2 = inv_arr
    for k in range(d):
        inv_ell2[k] = 1.0 / (ell[k] * ell[k])
    for i in range(n):
        K[i, i] = sf2
        for j in range(i + 1, n):
            u = _sqdist_row(&X[i, 0], &X[j, 0], &inv_ell2[0], d)
            K[i, j] = sf2 * exp(-u)
            K[j, i] = K[i, j]
    return K_arr


def se_cross(const double[:, ::1] X, const double[:, ::1] Z, const double[::1] ell, double sf2):
    cdef Py_ssize_t n = X.shape[0], m = Z.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double u
    K_arr = np.empty((n, m))
    cdef double[:, ::1] K = K_arr
    inv_arr = np.empty(d)
    cdef double[::1] inv_ell2 = inv_arr
    for k in range(d):
        inv_ell2[k] = 1.0 / (ell[k] * ell[k])
    for i in range(n):
        for j in range(m):
            u = _sqdist_row(&X[i, 0], &Z[j, 0], &inv_ell2[0], d)
            K[i, j] = sf2 * exp(-u)
    return K_arr


def se_matrix_with_gradients(const double[:, ::1] X, const double[::1] ell, double sf2,
                             bint ard):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t p = d if ard else 1
    cdef Py_ssize_t i, j, k
    cdef double u, kij, t, g
    K_arr = np.empty((n, n))
    G_arr = np.zeros((p + 1, n, n))
    cdef double[:, ::1] K = K_arr
    cdef double[:, :, ::1] G = G_arr
    inv_arr = np.empty(d)
    cdef double[::1] inv_ell2 = inv_arr
    cdef double sf_inv2 = 2.0 / sqrt(sf2)
    for k in range(d):
        inv_ell2[k] = 1.0 / (ell[k] * ell[k])
    for i in range(n):
        K[i, i] = sf2
        G[p, i, i] = sf_inv2 * sf2
        for j in range(i + 1, n):
            u = 0.0
            for k in range(d):
                t = X[i, k] - X[j, k]
                u += t * t * inv_ell2[k]
            if u < 0.0:
                u = 0.0
            kij = sf2 * exp(-u)
            K[i, j] = kij
            K[j, i] = kij
            if ard:
                for k in range(d):
                    t = X[i, k] - X[j, k]
                    g = kij * 2.0 * t * t * inv_ell2[k] / ell[k]
                    G[k, i, j] = g
                    G[k, j, i] = g
            else:
                g = kij * 2.0 * u / ell[0]
                G[0, i, j] = g
                G[0, j, i] = g
            g = sf_inv2 * kij
            G[p, i, j] = g
            G[p, j, i] = g
    return K_arr, G_arr


def matern52_matrix(const double[:, ::1] X, const double[::1] ell, double sf2):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double u, r
    K_arr = np.empty((n, n))
    cdef double[:, ::1] K = K_arr
    inv_arr = np.empty(d)
    cdef double[::1] inv_ell2 = inv_arr
    for k in range(d):
        inv_ell2[k] = 1.0 / (ell[k] * ell[k])
    for i in range(n):
        K[i, i] = sf2
        for j in range(i + 1, n):
            u = _sqdist_row(&X[i, 0], &X[j, 0], &inv_ell2[0], d)
            r = sqrt(u)
            K[i, j] = sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * u) * exp(-SQRT5 * r)
            K[j, i] = K[i, j]
    return K_arr


def matern52_cross(const double[:, ::1] X, const double[:, ::1] Z, const double[::1] ell,
                   double sf2):
    cdef Py_ssize_t n = X.shape[0], m = Z.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double u, r
    K_arr = np.empty((n, m))
    cdef double[:, ::1] K = K_arr
    inv_arr = np.empty(d)
    cdef double[::1] inv_ell2 = inv_arr
    for k in range(d):
        inv_ell2[k] = 1.0 / (ell[k] * ell[k])
    for i in range(n):
        for j in range(m):
            u = _sqdist_row(&X[i, 0], &Z[j, 0], &inv_ell2[0], d)
            r = sqrt(u)
            K[i, j] = sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * u) * exp(-SQRT5 * r)
    return K_arr


def matern52_matrix_with_gradients(const double[:, ::1] X, const double[::1] ell,
                                   double sf2, bint ard):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t p = d if ard else 1
    cdef Py_ssize_t i, j, k
    cdef double u, r, e, kij, common, t, g
    K_arr = np.empty((n, n))
    G_arr = np.zeros((p + 1, n, n))
    cdef double[:, ::1] K = K_arr
    cdef double[:, :, ::1] G = G_arr
    inv_arr = np.empty(d)
    cdef double[::1] inv_ell2 = inv_arr
    cdef double sf_inv2 = 2.0 / sqrt(sf2)
    for k in range(d):
        inv_ell2[k] = 1.0 / (ell[k] * ell[k])
    for i in range(n):
        K[i, i] = sf2
        G[p, i, i] = sf_inv2 * sf2
        for j in range(i + 1, n):
            u = 0.0
            for k in range(d):
                t = X[i, k] - X[j, k]
                u += t * t * inv_ell2[k]
            if u < 0.0:
                u = 0.0
            r = sqrt(u)
            e = exp(-SQRT5 * r)
            kij = sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * u) * e
            K[i, j] = kij
            K[j, i] = kij
            common = (5.0 / 3.0) * sf2 * (1.0 + SQRT5 * r) * e
            if ard:
                for k in range(d):
                    t = X[i, k] - X[j, k]
                    g = common * t * t * inv_ell2[k] / ell[k]
                    G[k, i, j] = g
                    G[k, j, i] = g
            else:
                g = common * u / ell[0]
                G[0, i, j] = g
                G[0, j, i] = g
            g = sf_inv2 * kij
            G[p, i, j] = g
            G[p, j, i] = g
    return K_arr, G_arr
