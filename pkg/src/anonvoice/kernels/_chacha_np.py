"""Vectorized numpy implementation of the ChaCha20 block function.

Original (djb) layout: 4 constant words, 8 key words, 64-bit block counter,
64-bit nonce. One call produces N independent keystream blocks, vectorized
over the (counter, nonce) axis, so throughput grows with batch size.
"""

import numpy as np

_CONSTANTS = np.array([0x61707865, 0x3320646E, 0x79622D32, 0x6B206574], dtype=np.uint32)

_U32_MASK = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def _quarter_round(x, a, b, c, d):
    x[a] += x[b]
    x[d] ^= x[a]
    x[d] = (x[d] << np.uint32(16)) | (x[d] >> np.uint32(16))
    x[c] += x[d]
    x[b] ^= x[c]
    x[b] = (x[b] << np.uint32(12)) | (x[b] >> np.uint32(20))
    x[a] += x[b]
    x[d] ^= x[a]
    x[d] = (x[d] << np.uint32(8)) | (x[d] >> np.uint32(24))
    x[c] += x[d]
    x[b] ^= x[c]
    x[b] = (x[b] << np.uint32(7)) | (x[b] >> np.uint32(25))


def chacha_blocks(key_words, nonces, counters):
    """Generate keystream blocks.

    key_words: (8,) uint32; nonces, counters: (N,) uint64.
    Returns (N, 16) uint32, one 64-byte block per row.
    """
    key_words = np.ascontiguousarray(key_words, dtype=np.uint32)
    nonces = np.ascontiguousarray(nonces, dtype=np.uint64)
    counters = np.ascontiguousarray(counters, dtype=np.uint64)
    n = nonces.shape[0]
    x = np.empty((16, n), dtype=np.uint32)
    for i in range(4):
        x[i] = _CONSTANTS[i]
    for i in range(8):
        x[4 + i] = key_words[i]
    x[12] = (counters & _U32_MASK).astype(np.uint32)
    x[13] = (counters >> _SHIFT32).astype(np.uint32)
    x[14] = (nonces & _U32_MASK).astype(np.uint32)
    x[15] = (nonces >> _SHIFT32).astype(np.uint32)
    initial = x.copy()
    for _ in range(10):
        _quarter_round(x, 0, 4, 8, 12)
        _quarter_round(x, 1, 5, 9, 13)
        _quarter_round(x, 2, 6, 10, 14)
        _quarter_round(x, 3, 7, 11, 15)
        _quarter_round(x, 0, 5, 10, 15)
        _quarter_round(x, 1, 6, 11, 12)
        _quarter_round(x, 2, 7, 8, 13)
        _quarter_round(x, 3, 4, 9, 14)
    x += initial
    return np.ascontiguousarray(x.T)
