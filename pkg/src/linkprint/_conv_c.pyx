# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled conv -> batch-norm -> ReLU block. Same contract as `_conv_py`.

Works in float32 or float64 (all array arguments share one dtype).
Reductions are split in two: per-position partial sums across rows (in
the working dtype, so the inner loops vectorise), then a double sum
across positions.
"""

import numpy as np
from libc.math cimport sqrt

ctypedef fused real:
    float
    double

cdef enum:
    MAX_WIDTH = 32


def forward(const real[:, ::1] X, const real[:, ::1] W, const real[::1] b,
            const real[::1] gamma, const real[::1] beta,
            const real[::1] run_mean, const real[::1] run_var, bint train, double eps):
    cdef Py_ssize_t N = X.shape[0], L = X.shape[1]
    cdef Py_ssize_t C = W.shape[0], K = W.shape[1]
    cdef Py_ssize_t Lo = L - K + 1
    cdef Py_ssize_t n, c, l, k
    cdef double s, m = <double>(N * Lo)
    cdef real bc, mc, ic, gc, betac, u
    cdef real w[MAX_WIDTH]
    cdef const real *x
    cdef real *z
    cdef real *o
    if K > MAX_WIDTH:
        raise ValueError("filter too wide")
    dtype = np.float32 if real is float else np.float64
    zhat_arr = np.empty((N, C, Lo), dtype=dtype)
    a_arr = np.empty((N, C, Lo), dtype=dtype)
    mu_arr = np.zeros(C, dtype=dtype)
    var_arr = np.zeros(C, dtype=dtype)
    inv_arr = np.empty(C, dtype=dtype)
    cdef real[:, :, ::1] zhat = zhat_arr
    cdef real[:, :, ::1] a = a_arr
    cdef real[::1] mu = mu_arr
    cdef real[::1] var = var_arr
    cdef real[::1] inv = inv_arr
    part_arr = np.empty(Lo, dtype=dtype)
    cdef real[::1] part = part_arr

    for c in range(C):
        for k in range(K):
            w[k] = W[c, k]
        bc = b[c]
        for n in range(N):
            x = &X[n, 0]
            z = &zhat[n, c, 0]
            for l in range(Lo):
                z[l] = bc
            for k in range(K):
                for l in range(Lo):
                    z[l] = z[l] + w[k] * x[l + k]
    for c in range(C):
        if train:
            for l in range(Lo):
                part[l] = 0
            for n in range(N):
                z = &zhat[n, c, 0]
                for l in range(Lo):
                    part[l] = part[l] + z[l]
            s = 0.0
            for l in range(Lo):
                s = s + part[l]
            mc = <real>(s / m)
            for l in range(Lo):
                part[l] = 0
            for n in range(N):
                z = &zhat[n, c, 0]
                for l in range(Lo):
                    u = z[l] - mc
                    part[l] = part[l] + u * u
            s = 0.0
            for l in range(Lo):
                s = s + part[l]
            mu[c] = mc
            var[c] = <real>(s / m)
        else:
            mu[c] = run_mean[c]
            var[c] = run_var[c]
        inv[c] = <real>(1.0 / sqrt(var[c] + eps))
        mc, ic, gc, betac = mu[c], inv[c], gamma[c], beta[c]
        for n in range(N):
            z = &zhat[n, c, 0]
            o = &a[n, c, 0]
            for l in range(Lo):
                u = (z[l] - mc) * ic
                z[l] = u
                u = gc * u + betac
                o[l] = u if u > 0 else 0
    return zhat_arr, a_arr, mu_arr, var_arr, inv_arr


def backward(const real[:, ::1] X, const real[:, ::1] W, const real[::1] gamma,
             const real[:, :, ::1] zhat, const real[:, :, ::1] a,
             const real[::1] inv, const real[:, :, ::1] dA):
    cdef Py_ssize_t N = zhat.shape[0], C = zhat.shape[1], Lo = zhat.shape[2]
    cdef Py_ssize_t K = W.shape[1]
    cdef Py_ssize_t n, c, l, k
    cdef double sb, sg, sdb, s0, m = <double>(N * Lo)
    cdef real d, dz, c0, c1, c2
    cdef real *acc_row
    cdef const real *x
    cdef const real *z
    cdef const real *av
    cdef const real *g
    if K > MAX_WIDTH:
        raise ValueError("filter too wide")
    dtype = np.float32 if real is float else np.float64
    scratch = np.empty((K + 3, Lo), dtype=dtype)
    cdef real[:, ::1] pw = scratch
    cdef real *row = &pw[K, 0]
    cdef real *pb = &pw[K + 1, 0]
    cdef real *pg = &pw[K + 2, 0]
    dW_arr = np.zeros((C, K), dtype=dtype)
    db_arr = np.zeros(C, dtype=dtype)
    dg_arr = np.zeros(C, dtype=dtype)
    dbt_arr = np.zeros(C, dtype=dtype)
    cdef real[:, ::1] dW = dW_arr
    cdef real[::1] db = db_arr
    cdef real[::1] dgamma = dg_arr
    cdef real[::1] dbeta = dbt_arr

    for c in range(C):
        for l in range(Lo):
            pb[l] = 0
            pg[l] = 0
        for n in range(N):
            z = &zhat[n, c, 0]
            av = &a[n, c, 0]
            g = &dA[n, c, 0]
            for l in range(Lo):
                d = g[l]
                d = d if av[l] > 0 else 0
                pb[l] = pb[l] + d
                pg[l] = pg[l] + d * z[l]
        sb = 0.0
        sg = 0.0
        for l in range(Lo):
            sb = sb + pb[l]
            sg = sg + pg[l]
        dbeta[c] = <real>sb
        dgamma[c] = <real>sg
        # dz = inv/m * (m*gamma*da - gamma*dbeta - zhat*gamma*dgamma)
        c0 = inv[c] * gamma[c]
        c1 = <real>(c0 * sb / m)
        c2 = <real>(c0 * sg / m)
        for l in range(Lo):
            pb[l] = 0
        for k in range(K):
            for l in range(Lo):
                pw[k, l] = 0
        for n in range(N):
            x = &X[n, 0]
            z = &zhat[n, c, 0]
            av = &a[n, c, 0]
            g = &dA[n, c, 0]
            for l in range(Lo):
                d = g[l]
                d = d if av[l] > 0 else 0
                dz = c0 * d - c1 - z[l] * c2
                row[l] = dz
                pb[l] = pb[l] + dz
            for k in range(K):
                acc_row = &pw[k, 0]
                for l in range(Lo):
                    acc_row[l] = acc_row[l] + row[l] * x[l + k]
        sdb = 0.0
        for l in range(Lo):
            sdb = sdb + pb[l]
        db[c] = <real>sdb
        for k in range(K):
            s0 = 0.0
            for l in range(Lo):
                s0 = s0 + pw[k, l]
            dW[c, k] = <real>s0
    return dW_arr, db_arr, dg_arr, dbt_arr
