# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: componentwise barrier maps and the grid reduction of
the critic / least-squares gain / actor update laws.

Summation over grid points runs in fixed index order so results are
bit-reproducible for a given build.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, fabs

cnp.import_array()


def barrier_vec(const double[::1] y, const double[::1] lo, const double[::1] hi, double tol):
    cdef Py_ssize_t n = y.shape[0], j
    out = np.empty(n)
    cdef double[::1] o = out
    for j in range(n):
        if not (y[j] > lo[j] + tol and y[j] < hi[j] - tol):
            return None, j
        o[j] = log(hi[j] * (lo[j] - y[j]) / (lo[j] * (hi[j] - y[j])))
    return out, -1


def barrier_inverse_vec(const double[::1] s, const double[::1] lo, const double[::1] hi):
    cdef Py_ssize_t n = s.shape[0], j
    cdef double e
    out = np.empty(n)
    cdef double[::1] o = out
    for j in range(n):
        e = exp(-fabs(s[j]))
        if s[j] >= 0.0:
            o[j] = lo[j] * hi[j] * (1.0 - e) / (lo[j] - hi[j] * e)
        else:
            o[j] = lo[j] * hi[j] * (e - 1.0) / (lo[j] * e - hi[j])
    return out


def rate_factor_vec(const double[::1] s, const double[::1] lo, const double[::1] hi):
    cdef Py_ssize_t n = s.shape[0], j
    cdef double a, A
    out = np.empty(n)
    cdef double[::1] o = out
    for j in range(n):
        a = lo[j]
        A = hi[j]
        o[j] = (a * a * exp(s[j]) - 2.0 * a * A + A * A * exp(-s[j])) / (A * a * a - a * A * A)
    return out


def grid_regressors(const double[:, ::1] omega0, const double[:, :, ::1] C,
                    const double[:, ::1] Rinv, const double[::1] Wa):
    cdef Py_ssize_t N = omega0.shape[0], L = omega0.shape[1], m = C.shape[2]
    cdef Py_ssize_t k, l, i, j
    cdef double acc
    omega_arr = np.empty((N, L))
    u_arr = np.empty((N, m))
    cdef double[:, ::1] omega = omega_arr
    cdef double[:, ::1] u = u_arr
    cdef double[::1] v = np.empty(m)
    for k in range(N):
        for j in range(m):
            acc = 0.0
            for l in range(L):
                acc += C[k, l, j] * Wa[l]
            v[j] = acc
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += Rinv[i, j] * v[j]
            u[k, i] = -0.5 * acc
        for l in range(L):
            acc = omega0[k, l]
            for j in range(m):
                acc += C[k, l, j] * u[k, j]
            omega[k, l] = acc
    return omega_arr, u_arr


def learner_rates(const double[:, ::1] omega0, const double[:, :, ::1] C, const double[::1] q,
                  const double[:, ::1] R, const double[:, ::1] Rinv,
                  const double[::1] Wc, const double[:, ::1] Gamma, const double[::1] Wa,
                  double kc, double ka1, double ka2, double beta, double gamma):
    cdef Py_ssize_t N = omega0.shape[0], L = omega0.shape[1], m = C.shape[2]
    cdef Py_ssize_t k, l, p, i, j
    cdef double acc, ow, delta, rho, onorm, uRu, w1, w2, scale

    cdef double[::1] v = np.empty(m)
    cdef double[::1] u = np.empty(m)
    cdef double[::1] Cu = np.empty(L)
    cdef double[::1] om = np.empty(L)
    cdef double[::1] sum_c = np.zeros(L)       # sum omega_k delta_k / rho_k
    cdef double[::1] sum_a = np.zeros(L)       # sum (-2 C_k u_k) (omega_k . Wc) / rho_k
    cdef double[:, ::1] M = np.zeros((L, L))   # sum omega_k omega_k^T / rho_k^2

    for k in range(N):
        for j in range(m):
            acc = 0.0
            for l in range(L):
                acc += C[k, l, j] * Wa[l]
            v[j] = acc
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += Rinv[i, j] * v[j]
            u[i] = -0.5 * acc
        uRu = 0.0
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += R[i, j] * u[j]
            uRu += u[i] * acc
        ow = 0.0
        onorm = 0.0
        for l in range(L):
            acc = 0.0
            for j in range(m):
                acc += C[k, l, j] * u[j]
            Cu[l] = acc
            om[l] = omega0[k, l] + acc
            ow += om[l] * Wc[l]
            onorm += om[l] * om[l]
        delta = ow + q[k] + uRu
        rho = 1.0 + gamma * onorm
        w1 = delta / rho
        w2 = ow / rho
        scale = 1.0 / (rho * rho)
        for l in range(L):
            sum_c[l] += om[l] * w1
            sum_a[l] += -2.0 * Cu[l] * w2
            for p in range(l, L):
                M[l, p] += om[l] * om[p] * scale
    for l in range(L):
        for p in range(l):
            M[l, p] = M[p, l]

    dWc_arr = np.empty(L)
    dWa_arr = np.empty(L)
    dG_arr = np.empty((L, L))
    cdef double[::1] dWc = dWc_arr
    cdef double[::1] dWa = dWa_arr
    cdef double[:, ::1] dG = dG_arr
    cdef double[:, ::1] GM = np.empty((L, L))
    cdef double cN = kc / N

    for l in range(L):
        acc = 0.0
        for p in range(L):
            acc += Gamma[l, p] * sum_c[p]
        dWc[l] = -cN * acc
        dWa[l] = -ka1 * (Wa[l] - Wc[l]) + 0.25 * cN * sum_a[l] - ka2 * Wa[l]
    for l in range(L):
        for p in range(L):
            acc = 0.0
            for i in range(L):
                acc += Gamma[l, i] * M[i, p]
            GM[l, p] = acc
    for l in range(L):
        for p in range(L):
            acc = 0.0
            for i in range(L):
                acc += GM[l, i] * Gamma[i, p]
            dG[l, p] = beta * Gamma[l, p] - cN * acc
    for l in range(L):
        for p in range(l + 1, L):
            acc = 0.5 * (dG[l, p] + dG[p, l])
            dG[l, p] = acc
            dG[p, l] = acc
    return dWc_arr, dG_arr, dWa_arr
