# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must stay draw-for-draw identical to _pykernels."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _below(uint64_t* state, uint64_t m) nogil:
    cdef uint64_t x, prod, low, thresh
    state[0] += GAMMA
    x = _mix(state[0]) >> 32
    prod = x * m
    low = prod & 0xFFFFFFFFULL
    if low < m:
        thresh = ((<uint64_t>1 << 32) - m) % m
        while low < thresh:
            state[0] += GAMMA
            x = _mix(state[0]) >> 32
            prod = x * m
            low = prod & 0xFFFFFFFFULL
    return prod >> 32


def mc_failures(match_sizes, truth_pos, Py_ssize_t trials, seed):
    cdef cnp.ndarray[int64_t, ndim=1] m_arr = np.ascontiguousarray(match_sizes, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] p_arr = np.ascontiguousarray(truth_pos, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] out = np.zeros(max(trials, 0), dtype=np.int64)
    cdef Py_ssize_t n = m_arr.shape[0]
    cdef Py_ssize_t t, j
    cdef uint64_t base = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t state
    cdef int64_t fails
    cdef int64_t* mp = &m_arr[0] if n > 0 else NULL
    cdef int64_t* pp = &p_arr[0] if n > 0 else NULL
    with nogil:
        for t in range(trials):
            state = _mix(base + <uint64_t>(t + 1) * GAMMA)
            fails = 0
            for j in range(n):
                if <int64_t>_below(&state, <uint64_t>mp[j]) != pp[j]:
                    fails += 1
            out[t] = fails
    return out
