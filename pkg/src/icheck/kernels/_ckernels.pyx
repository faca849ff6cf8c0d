# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled bitset kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
from libc.stdint cimport uint64_t, int64_t, uint8_t

BACKEND = "cython"


def violations(const uint64_t[:, ::1] dbs, const uint64_t[:, ::1] pos, const uint64_t[:, ::1] neg):
    cdef Py_ssize_t n = dbs.shape[0]
    cdef Py_ssize_t k = pos.shape[0]
    cdef Py_ssize_t w = dbs.shape[1]
    out = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    cdef Py_ssize_t i, j, x
    cdef bint ok
    cdef uint64_t d
    with nogil:
        for i in range(n):
            for j in range(k):
                ok = True
                for x in range(w):
                    d = dbs[i, x]
                    if (d & pos[j, x]) != pos[j, x] or (d & neg[j, x]) != 0:
                        ok = False
                        break
                if ok:
                    o[i] = 1
                    break
    return out


def expand(const uint64_t[::1] idx, const int64_t[::1] positions, Py_ssize_t words):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t f = positions.shape[0]
    out = np.zeros((n, words), dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    cdef Py_ssize_t i, b
    cdef int64_t p
    cdef uint64_t v
    with nogil:
        for i in range(n):
            v = idx[i]
            # branch-free: the bits are random, so a test mispredicts half the time
            for b in range(f):
                p = positions[b]
                o[i, p >> 6] |= ((v >> b) & 1) << (p & 63)
    return out


def permute(const uint64_t[:, ::1] dbs, const int64_t[::1] src):
    cdef Py_ssize_t n = dbs.shape[0]
    cdef Py_ssize_t w = dbs.shape[1]
    cdef Py_ssize_t m = src.shape[0]
    out = np.zeros((n, w), dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    cdef Py_ssize_t i, j, x, hi
    cdef int64_t s
    cdef uint64_t acc
    with nogil:
        for i in range(n):
            # build each output word in a register
            for x in range(w):
                acc = 0
                hi = min(m, 64 * x + 64)
                for j in range(64 * x, hi):
                    s = src[j]
                    acc |= ((dbs[i, s >> 6] >> (s & 63)) & 1) << (j & 63)
                o[i, x] = acc
    return out
