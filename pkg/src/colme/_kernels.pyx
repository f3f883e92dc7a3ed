# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()

FOLD_KEEP, FOLD_MEAN, FOLD_SIGMA, FOLD_KURTOSIS = 0, 1, 2, 3


cdef inline double _kernel(double gap, double two_beta) nogil:
    cdef double z
    if two_beta <= 0:
        return 0.0 if gap > 0 else 1.0
    z = 2.0 * gap / two_beta
    z = z * z
    return exp(-(z * z))


def check_edges(const long[::1] eu, const long[::1] ev,
                const double[::1] xbar, const double[::1] sig,
                const double[::1] kap, const double[::1] hw,
                double kwidth, bint use_sigma, bint use_kurt, bint weighted):
    cdef Py_ssize_t m = eu.shape[0], i
    cdef long a, b
    cdef double two_beta, gap, w, tk = 2.0 * kwidth
    cdef signed char c
    code_arr = np.zeros(m, dtype=np.int8)
    weight_arr = np.ones(m, dtype=np.float64)
    cdef signed char[::1] code = code_arr
    cdef double[::1] weight = weight_arr
    with nogil:
        for i in range(m):
            a = eu[i]
            b = ev[i]
            two_beta = hw[a] + hw[b]
            c = 0
            gap = fabs(xbar[a] - xbar[b])
            if gap > two_beta:
                c = 1
            w = _kernel(gap, two_beta) if weighted else 1.0
            if use_sigma:
                gap = fabs(sig[a] - sig[b])
                if c == 0 and gap > two_beta:
                    c = 2
                if weighted:
                    w = min(w, _kernel(gap, two_beta))
            if use_kurt:
                gap = fabs(kap[a] - kap[b])
                if c == 0 and gap > tk:
                    c = 3
                if weighted:
                    w = min(w, _kernel(gap, tk))
            code[i] = c
            weight[i] = w
    return code_arr, weight_arr


def bcolme_exchange(const long[::1] src, const long[::1] dst, const long[::1] rev,
                    const unsigned char[::1] alive, const double[::1] recv_w,
                    double[:, :, ::1] msg, const double[::1] local_sum,
                    double t, int depth):
    cdef Py_ssize_t n = local_sum.shape[0], m = src.shape[0]
    cdef Py_ssize_t e, k, u, r
    cdef double w, s0, s1
    new_arr = np.zeros((m, depth, 2), dtype=np.float64)
    num_arr = np.array(local_sum, dtype=np.float64, copy=True)
    den_arr = np.full(n, t, dtype=np.float64)
    if depth == 0:
        return new_arr, num_arr, den_arr
    cdef double[:, :, ::1] new = new_arr
    cdef double[::1] num = num_arr
    cdef double[::1] den = den_arr
    acc_arr = np.zeros((n, max(depth - 1, 1), 2), dtype=np.float64)
    cdef double[:, :, ::1] acc = acc_arr
    with nogil:
        if depth > 1:
            for e in range(m):
                w = recv_w[e]
                if w == 0:
                    continue
                u = dst[e]
                for k in range(depth - 1):
                    acc[u, k, 0] += w * msg[e, k, 0]
                    acc[u, k, 1] += w * msg[e, k, 1]
        for e in range(m):
            if not alive[e]:
                continue
            u = src[e]
            r = rev[e]
            w = recv_w[r]
            new[e, 0, 0] = local_sum[u]
            new[e, 0, 1] = t
            for k in range(1, depth):
                new[e, k, 0] = acc[u, k - 1, 0] - w * msg[r, k - 1, 0]
                new[e, k, 1] = acc[u, k - 1, 1] - w * msg[r, k - 1, 1]
        for e in range(m):
            w = recv_w[e]
            if w == 0 or not alive[e]:
                continue
            s0 = 0.0
            s1 = 0.0
            for k in range(depth):
                s0 += new[e, k, 0]
                s1 += new[e, k, 1]
            num[dst[e]] += w * s0
            den[dst[e]] += w * s1
    return new_arr, num_arr, den_arr


def consensus_step(const long[::1] eu, const long[::1] ev, const double[::1] ew,
                   const double[::1] X, const double[::1] mu, double alpha):
    cdef Py_ssize_t n = X.shape[0], m = eu.shape[0], i
    cdef long a, b
    cdef double w, f, da, db
    D_arr = np.zeros(n, dtype=np.float64)
    out_arr = np.array(mu, dtype=np.float64, copy=True)
    cdef double[::1] D = D_arr
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(m):
            D[eu[i]] += ew[i]
            D[ev[i]] += ew[i]
        for i in range(m):
            if ew[i] == 0:
                continue
            a = eu[i]
            b = ev[i]
            da = D[a]
            db = D[b]
            w = ew[i] / ((da if da > db else db) + 1.0)
            f = w * (mu[b] - mu[a])
            out[a] += f
            out[b] -= f
        for i in range(n):
            out[i] = (1.0 - alpha) * X[i] + alpha * out[i]
    return out_arr
