# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the routines in ``_fallback``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def hankel_adjoint(const double[:, :] B, Py_ssize_t r, Py_ssize_t n_ch, Py_ssize_t n_samples):
    cdef Py_ssize_t N = B.shape[1]
    cdef Py_ssize_t j, k, c
    out = np.zeros(n_samples * n_ch)
    cdef double[:] o = out
    for j in range(r):
        for k in range(N):
            for c in range(n_ch):
                o[(j + k) * n_ch + c] += B[j * n_ch + c, k]
    return out


def gram_assemble(const double[:, :] P, const double[:, :] Q, Py_ssize_t r, Py_ssize_t n_ch, Py_ssize_t N):
    cdef Py_ssize_t n_samples = N + r - 1
    cdef Py_ssize_t n = n_samples * n_ch
    cdef Py_ssize_t k, l, c, d, j, jp, jlo, jhi, jplo, jphi
    cdef double acc, p
    M = np.zeros((n, n))
    cdef double[:, :] m = M
    # M is symmetric: fill the upper triangle by sample index, mirror below
    for k in range(n_samples):
        jlo = k - N + 1 if k - N + 1 > 0 else 0
        jhi = k if k < r - 1 else r - 1
        for l in range(k, n_samples):
            jplo = l - N + 1 if l - N + 1 > 0 else 0
            jphi = l if l < r - 1 else r - 1
            for c in range(n_ch):
                for d in range(n_ch):
                    acc = 0.0
                    for j in range(jlo, jhi + 1):
                        for jp in range(jplo, jphi + 1):
                            acc += P[j * n_ch + c, jp * n_ch + d] * Q[k - j, l - jp]
                    m[k * n_ch + c, l * n_ch + d] = acc
                    m[l * n_ch + d, k * n_ch + c] = acc
    return M


def state_recursion(const double[:, :] A, const double[:, :, :] drive, const double[:, :] x0):
    cdef Py_ssize_t T = drive.shape[0]
    cdef Py_ssize_t n = drive.shape[1]
    cdef Py_ssize_t b = drive.shape[2]
    cdef Py_ssize_t k, i, j, col
    cdef double acc
    X = np.empty((T, n, b))
    cdef double[:, :, :] xs = X
    cdef double[:, :] cur = np.array(x0, dtype=np.float64)
    cdef double[:, :] nxt = np.empty((n, b))
    cdef double[:, :] tmp
    for k in range(T):
        for i in range(n):
            for col in range(b):
                xs[k, i, col] = cur[i, col]
        for i in range(n):
            for col in range(b):
                acc = drive[k, i, col]
                for j in range(n):
                    acc += A[i, j] * cur[j, col]
                nxt[i, col] = acc
        tmp = cur
        cur = nxt
        nxt = tmp
    return X
