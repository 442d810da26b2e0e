# Compiled kernels: ChaCha20 block generation and Jacobi rotation sweeps.
# Must stay bit-identical to the numpy fallbacks (_chacha_np / _jacobi_np):
# same formulas, same evaluation order, no fast-math.

from libc.stdint cimport uint32_t, uint64_t
from libc.math cimport fabs, sqrt

import numpy as np


cdef inline uint32_t _rotl(uint32_t x, int n) noexcept nogil:
    return (x << n) | (x >> (32 - n))


cdef inline void _qr(uint32_t* x, int a, int b, int c, int d) noexcept nogil:
    x[a] = x[a] + x[b]
    x[d] = _rotl(x[d] ^ x[a], 16)
    x[c] = x[c] + x[d]
    x[b] = _rotl(x[b] ^ x[c], 12)
    x[a] = x[a] + x[b]
    x[d] = _rotl(x[d] ^ x[a], 8)
    x[c] = x[c] + x[d]
    x[b] = _rotl(x[b] ^ x[c], 7)


cdef void _chacha_block(const uint32_t* key, uint64_t nonce, uint64_t counter,
                        uint32_t* out) noexcept nogil:
    cdef uint32_t x[16]
    cdef uint32_t init[16]
    cdef int i
    x[0] = 0x61707865u
    x[1] = 0x3320646Eu
    x[2] = 0x79622D32u
    x[3] = 0x6B206574u
    for i in range(8):
        x[4 + i] = key[i]
    x[12] = <uint32_t>(counter & 0xFFFFFFFFu)
    x[13] = <uint32_t>(counter >> 32)
    x[14] = <uint32_t>(nonce & 0xFFFFFFFFu)
    x[15] = <uint32_t>(nonce >> 32)
    for i in range(16):
        init[i] = x[i]
    for i in range(10):
        _qr(x, 0, 4, 8, 12)
        _qr(x, 1, 5, 9, 13)
        _qr(x, 2, 6, 10, 14)
        _qr(x, 3, 7, 11, 15)
        _qr(x, 0, 5, 10, 15)
        _qr(x, 1, 6, 11, 12)
        _qr(x, 2, 7, 8, 13)
        _qr(x, 3, 4, 9, 14)
    for i in range(16):
        out[i] = x[i] + init[i]


def chacha_blocks(key_words, nonces, counters):
    """Generate keystream blocks; same contract as the numpy fallback."""
    key = np.ascontiguousarray(key_words, dtype=np.uint32)
    non = np.ascontiguousarray(nonces, dtype=np.uint64)
    cnt = np.ascontiguousarray(counters, dtype=np.uint64)
    cdef Py_ssize_t n = non.shape[0]
    out = np.empty((n, 16), dtype=np.uint32)
    cdef const uint32_t[::1] kv = key
    cdef const uint64_t[::1] nv = non
    cdef const uint64_t[::1] cv = cnt
    cdef uint32_t[:, ::1] ov = out
    cdef Py_ssize_t i
    if n > 0:
        with nogil:
            for i in range(n):
                _chacha_block(&kv[0], nv[i], cv[i], &ov[i, 0])
    return out


cdef int _jacobi_impl(double[:, ::1] a, double[:, ::1] v, double abs_tol,
                      int max_sweeps) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef bint rotated
    cdef double apq, app, aqq, diff, theta, t, c, s, tau, delta
    cdef double akp, akq, wp, wq, g, h
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) <= abs_tol:
                    continue
                rotated = True
                app = a[p, p]
                aqq = a[q, q]
                diff = aqq - app
                if fabs(diff) + 100.0 * fabs(apq) == fabs(diff):
                    t = apq / diff
                else:
                    theta = 0.5 * diff / apq
                    t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                delta = t * apq
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    wp = akp - s * (akq + akp * tau)
                    wq = akq + s * (akp - akq * tau)
                    a[k, p] = wp
                    a[p, k] = wp
                    a[k, q] = wq
                    a[q, k] = wq
                a[p, p] = app - delta
                a[q, q] = aqq + delta
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    g = v[k, p]
                    h = v[k, q]
                    v[k, p] = g - s * (h + g * tau)
                    v[k, q] = h + s * (g - h * tau)
        if not rotated:
            return sweep
    return -1


def jacobi_sweeps(double[:, ::1] a, double[:, ::1] v, double abs_tol, int max_sweeps):
    """Cyclic Jacobi sweeps in place; same contract as the numpy fallback."""
    cdef int result
    with nogil:
        result = _jacobi_impl(a, v, abs_tol, max_sweeps)
    return result
