# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, erfc, NAN
from libc.stdint cimport uint64_t, int64_t, int32_t
from scipy.special.cython_special cimport ndtri

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.1102230246251565e-16
cdef double INV_SQRT_2PI = 0.3989422804014327
cdef double INV_SQRT2 = 0.7071067811865476


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform_at(uint64_t key, uint64_t j) noexcept nogil:
    return (<double>(mix64(key + (j + 1) * GOLDEN) >> 11) + 0.5) * TWO_M53


cdef inline double ndtr_c(double x) noexcept nogil:
    return 0.5 * erfc(-x * INV_SQRT2)


def stream_keys(uint64_t seed, int64_t rep_start, int64_t count):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(count, dtype=np.uint64)
    cdef int64_t r
    for r in range(count):
        out[r] = mix64(seed + <uint64_t>(rep_start + r + 1) * GOLDEN)
    return out


def uniforms(uint64_t seed, int64_t rep_start, int64_t count, int64_t j_start, int64_t j_count):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((count, j_count))
    cdef double[:, ::1] ov = out
    cdef int64_t r, j
    cdef uint64_t key
    with nogil:
        for r in range(count):
            key = mix64(seed + <uint64_t>(rep_start + r + 1) * GOLDEN)
            for j in range(j_count):
                ov[r, j] = uniform_at(key, <uint64_t>(j_start + j))
    return out


def outcomes(uint64_t seed, int64_t rep_start, int64_t count, int64_t n_total,
             double theta, double sigma):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((count, n_total))
    cdef double[:, ::1] ov = out
    cdef int64_t r, j
    cdef uint64_t key
    with nogil:
        for r in range(count):
            key = mix64(seed + <uint64_t>(rep_start + r + 1) * GOLDEN)
            for j in range(n_total):
                ov[r, j] = theta + sigma * ndtri(uniform_at(key, <uint64_t>j))
    return out


def normal_mix_pdf(t, s, wf, double a, double m, double b):
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(wf, dtype=np.float64)
    cdef Py_ssize_t nt = tv.shape[0], ns = sv.shape[0], i, j
    out = np.empty(nt)
    cdef double[::1] ov = out
    cdef double acc, z, ti
    cdef double inv_b = 1.0 / b
    with nogil:
        for i in range(nt):
            ti = tv[i] - m
            acc = 0.0
            for j in range(ns):
                z = (ti - a * sv[j]) * inv_b
                acc = acc + wv[j] * exp(-0.5 * z * z)
            ov[i] = acc * INV_SQRT_2PI * inv_b
    return out


def normal_mix_cdf(t, s, wf, double a, double m, double b, bint upper=False):
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(wf, dtype=np.float64)
    cdef Py_ssize_t nt = tv.shape[0], ns = sv.shape[0], i, j
    out = np.empty(nt)
    cdef double[::1] ov = out
    cdef double acc, z, ti
    cdef double sign = -1.0 if upper else 1.0
    with nogil:
        for i in range(nt):
            ti = tv[i] - m
            acc = 0.0
            for j in range(ns):
                z = sign * (ti - a * sv[j]) / b
                acc = acc + wv[j] * ndtr_c(z)
            ov[i] = acc
    return out


def simulate_block(uint64_t seed, int64_t rep_start, int64_t count, double theta,
                   double sigma, stage_n, boundaries):
    cdef int64_t[::1] nv = np.ascontiguousarray(stage_n, dtype=np.int64)
    cdef double[::1] cv = np.ascontiguousarray(boundaries, dtype=np.float64)
    cdef Py_ssize_t k = nv.shape[0]
    d_arr = np.empty(count, dtype=np.int32)
    z_arr = np.full((count, k), np.nan)
    tot_arr = np.empty(count)
    cdef int32_t[::1] dv = d_arr
    cdef double[:, ::1] zv = z_arr
    cdef double[::1] totv = tot_arr
    cdef int64_t r, i, idx, ncum
    cdef Py_ssize_t stage
    cdef uint64_t key
    cdef double acc, zs
    with nogil:
        for r in range(count):
            key = mix64(seed + <uint64_t>(rep_start + r + 1) * GOLDEN)
            acc = 0.0
            idx = 0
            ncum = 0
            dv[r] = <int32_t>k
            for stage in range(k):
                for i in range(nv[stage]):
                    acc = acc + (theta + sigma * ndtri(uniform_at(key, <uint64_t>idx)))
                    idx += 1
                ncum += nv[stage]
                zs = acc / (sigma * sqrt(<double>ncum))
                zv[r, stage] = zs
                if stage < k - 1 and zs > cv[stage]:
                    dv[r] = <int32_t>(stage + 1)
                    break
            totv[r] = acc
    return d_arr, z_arr, tot_arr
