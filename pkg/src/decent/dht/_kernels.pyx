# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled XOR-metric kernels over 160-bit identifiers.

Identifiers are stored as three limbs per id in a flat ``array('Q')``:
bits 159..128 (zero-extended), 127..64, 63..0.
"""
from array import array

from libc.stdint cimport uint64_t

BACKEND = "compiled"

cdef uint64_t MASK64 = 0xFFFFFFFFFFFFFFFF


def build_table(ids):
    out = array("Q")
    for x in ids:
        out.append((x >> 128) & MASK64)
        out.append((x >> 64) & MASK64)
        out.append(x & MASK64)
    return out


cdef inline bint _less(uint64_t a0, uint64_t a1, uint64_t a2,
                       uint64_t b0, uint64_t b1, uint64_t b2) nogil:
    if a0 != b0:
        return a0 < b0
    if a1 != b1:
        return a1 < b1
    return a2 < b2


def closest(table, target, int k):
    """Indices of the ``k`` ids nearest ``target`` by XOR distance, nearest first."""
    cdef const uint64_t[::1] t = table
    cdef Py_ssize_t n = t.shape[0] // 3
    if k > n:
        k = n
    if k <= 0:
        return []
    cdef uint64_t x0 = (target >> 128) & MASK64
    cdef uint64_t x1 = (target >> 64) & MASK64
    cdef uint64_t x2 = target & MASK64
    cdef uint64_t[::1] b0 = array("Q", [0]) * k
    cdef uint64_t[::1] b1 = array("Q", [0]) * k
    cdef uint64_t[::1] b2 = array("Q", [0]) * k
    cdef long long[::1] bi = array("q", [0]) * k
    cdef Py_ssize_t filled = 0, i, j
    cdef uint64_t d0, d1, d2
    with nogil:
        for i in range(n):
            d0 = t[3 * i] ^ x0
            d1 = t[3 * i + 1] ^ x1
            d2 = t[3 * i + 2] ^ x2
            if filled == k and not _less(d0, d1, d2, b0[k - 1], b1[k - 1], b2[k - 1]):
                continue
            j = filled if filled < k else k - 1
            while j > 0 and _less(d0, d1, d2, b0[j - 1], b1[j - 1], b2[j - 1]):
                b0[j] = b0[j - 1]
                b1[j] = b1[j - 1]
                b2[j] = b2[j - 1]
                bi[j] = bi[j - 1]
                j -= 1
            b0[j] = d0
            b1[j] = d1
            b2[j] = d2
            bi[j] = i
            if filled < k:
                filled += 1
    return [bi[i] for i in range(filled)]


def bucket_index(a, b):
    """Index of the highest differing bit of ``a ^ b``; -1 when equal."""
    return (a ^ b).bit_length() - 1
