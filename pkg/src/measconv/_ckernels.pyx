# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: counter-based uniforms and float table convolution."""

import numpy as np
from libc.stdint cimport uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef uint64_t STEP = 0xD1B54A32D192ED03ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _splitmix(uint64_t z) nogil:
    z = z + GOLDEN
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cpdef unsigned long long stream_key(object seed, object stream):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t t = <uint64_t>(stream & 0xFFFFFFFFFFFFFFFF)
    return _splitmix(_splitmix(s) ^ (t * STEP))


def uniforms(seed, stream, start, Py_ssize_t n):
    cdef uint64_t key = stream_key(seed, stream)
    cdef uint64_t first = <uint64_t>start
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] view = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            view[i] = <double>(_splitmix(key + (first + <uint64_t>i) * STEP) >> 11) * INV53
    return out


def table_convolve_float(action, mu, nu):
    cdef Py_ssize_t[:, ::1] act = np.ascontiguousarray(action, dtype=np.intp)
    cdef double[::1] mw = np.ascontiguousarray(mu, dtype=np.float64)
    cdef double[::1] nw = np.ascontiguousarray(nu, dtype=np.float64)
    out = np.zeros(nw.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t g, x
    with nogil:
        for g in range(act.shape[0]):
            for x in range(act.shape[1]):
                o[act[g, x]] += mw[g] * nw[x]
    return out
