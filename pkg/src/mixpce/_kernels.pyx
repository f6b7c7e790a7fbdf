# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same signatures and results as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()


def monomial_matrix(points, exponents):
    cdef const double[:, ::1] x = np.ascontiguousarray(points, dtype=np.float64)
    cdef const long long[:, ::1] e = np.ascontiguousarray(exponents, dtype=np.int64)
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1], n = e.shape[0]
    out_arr = np.empty((m, n), dtype=np.float64)
    if m == 0 or n == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t pmax = 0, i, j, k, q, nnz = 0
    for j in range(n):
        for k in range(d):
            if e[j, k] > pmax:
                pmax = e[j, k]
            if e[j, k] != 0:
                nnz += 1
    # sparse (var, exponent) list per monomial
    offs_arr = np.zeros(n + 1, dtype=np.int64)
    var_arr = np.zeros(max(nnz, 1), dtype=np.int64)
    pw_arr = np.zeros(max(nnz, 1), dtype=np.int64)
    cdef long long[::1] offs = offs_arr, var = var_arr, pw = pw_arr
    q = 0
    for j in range(n):
        offs[j] = q
        for k in range(d):
            if e[j, k] != 0:
                var[q] = k
                pw[q] = e[j, k]
                q += 1
    offs[n] = q
    cdef Py_ssize_t stride = pmax + 1
    cdef double *cache = <double *> malloc(d * stride * sizeof(double))
    if cache == NULL:
        raise MemoryError()
    cdef double acc
    try:
        with nogil:
            for i in range(m):
                for k in range(d):
                    cache[k * stride] = 1.0
                    for q in range(1, stride):
                        cache[k * stride + q] = cache[k * stride + q - 1] * x[i, k]
                for j in range(n):
                    acc = 1.0
                    for q in range(offs[j], offs[j + 1]):
                        acc = acc * cache[var[q] * stride + pw[q]]
                    out[i, j] = acc
    finally:
        free(cache)
    return out_arr


def pair_expectation(head_l, cores_l, head_r, cores_r, gmom):
    cdef const double[::1] g = np.ascontiguousarray(gmom, dtype=np.float64)
    cdef const double[::1] hl = np.ascontiguousarray(head_l, dtype=np.float64)
    cdef const double[::1] hr = np.ascontiguousarray(head_r, dtype=np.float64)
    cdef Py_ssize_t rl = hl.shape[0], rr = hr.shape[0]
    cdef Py_ssize_t i, j, a, b, p, q, nl, nr, dl, dr
    cdef const double[:, :, ::1] el
    cdef const double[:, :, ::1] er
    cdef double w, acc
    v_arr = np.outer(hl, hr)
    cdef double[:, ::1] v = v_arr
    cdef double[:, ::1] s
    cdef double[:, ::1] new
    for core_l, core_r in zip(cores_l, cores_r):
        el = np.ascontiguousarray(core_l, dtype=np.float64)
        er = np.ascontiguousarray(core_r, dtype=np.float64)
        dl = el.shape[0]
        dr = er.shape[0]
        nl = el.shape[2]
        nr = er.shape[2]
        new_arr = np.zeros((nl, nr))
        new = new_arr
        s_arr = np.empty((rl, nr))
        s = s_arr
        for a in range(dl):
            # s = sum_b g[a+b] * (v @ er[b])
            memset(&s[0, 0], 0, rl * nr * sizeof(double))
            for b in range(dr):
                w = g[a + b]
                if w == 0.0:
                    continue
                for i in range(rl):
                    for q in range(nr):
                        acc = 0.0
                        for j in range(rr):
                            acc = acc + v[i, j] * er[b, j, q]
                        s[i, q] = s[i, q] + w * acc
            # new += el[a].T @ s
            for p in range(nl):
                for i in range(rl):
                    w = el[a, i, p]
                    if w == 0.0:
                        continue
                    for q in range(nr):
                        new[p, q] = new[p, q] + w * s[i, q]
        v = new
        rl = nl
        rr = nr
    return float(v[0, 0])
