"""Deterministic secret-seeded random streams.

A stream is keyed by SHA-256(context || 0x00 || secret) and generated with
the ChaCha20 block function in counter mode. It yields 64-bit words; uniform
doubles come from the top 53 bits of each word and normal variates from the
Box-Muller transform applied to consecutive uniform pairs. Identical
(secret, context) always reproduces the identical stream, and distinct
contexts give independent streams for the same secret.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError

_WORDS_PER_BLOCK = 8  # 64-byte block = 8 x 64-bit words
_MIN_REFILL_BLOCKS = 8
_INV_2_53 = 2.0 ** -53
_SHIFT11 = np.uint64(11)


@dataclass(frozen=True)
class Secret:
    """User-known secret; any non-empty byte string."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, (bytes, bytearray)):
            raise ConfigError("secret must be a byte string")
        if len(self.data) == 0:
            raise ConfigError("secret must not be empty")
        object.__setattr__(self, "data", bytes(self.data))

    @classmethod
    def from_text(cls, text: str) -> "Secret":
        return cls(text.encode("utf-8"))

    def digest(self) -> bytes:
        """32-byte SHA-256 digest of the secret."""
        return hashlib.sha256(self.data).digest()


def stream_key(context: str, secret_bytes: bytes) -> bytes:
    """32-byte stream key: SHA-256(context || 0x00 || secret)."""
    return hashlib.sha256(context.encode("utf-8") + b"\x00" + secret_bytes).digest()


class RandomStream:
    """Counter-mode ChaCha20 stream over a 32-byte key.

    Streams with different nonces under the same key are independent;
    this is used for per-utterance noise streams.
    """

    def __init__(self, key: bytes, nonce: int = 0):
        if len(key) != 32:
            raise ConfigError("stream key must be exactly 32 bytes")
        self._key_words = np.frombuffer(key, dtype="<u4").copy()
        self._nonce = np.uint64(nonce)
        self._counter = 0
        self._buf = np.empty(0, dtype=np.uint64)
        self._pos = 0

    def _refill(self, words_needed: int):
        blocks = max(-(-words_needed // _WORDS_PER_BLOCK), _MIN_REFILL_BLOCKS)
        nonces = np.full(blocks, self._nonce, dtype=np.uint64)
        counters = np.arange(self._counter, self._counter + blocks, dtype=np.uint64)
        raw = kernels.chacha_blocks(self._key_words, nonces, counters)
        self._buf = raw.reshape(-1).view(np.uint64)
        self._pos = 0
        self._counter += blocks

    def words(self, n: int) -> np.ndarray:
        """Next n 64-bit words of the stream."""
        out = np.empty(n, dtype=np.uint64)
        filled = 0
        while filled < n:
            available = self._buf.shape[0] - self._pos
            if available == 0:
                self._refill(n - filled)
                continue
            take = min(available, n - filled)
            out[filled:filled + take] = self._buf[self._pos:self._pos + take]
            self._pos += take
            filled += take
        return out

    def _next_word(self) -> int:
        if self._pos >= self._buf.shape[0]:
            self._refill(1)
        word = int(self._buf[self._pos])
        self._pos += 1
        return word

    def uniforms(self, n: int) -> np.ndarray:
        """n uniform doubles in [0, 1), one per 64-bit word (top 53 bits)."""
        return uniforms_from_words(self.words(n))

    def normals(self, n: int) -> np.ndarray:
        """n standard normal variates (Box-Muller over consecutive uniform pairs)."""
        pairs = (n + 1) // 2
        return normals_from_uniforms(self.uniforms(2 * pairs))[:n]

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n), rejection-sampled to avoid modulo bias."""
        if n <= 0:
            raise ConfigError("randbelow requires a positive bound")
        limit = (2 ** 64 // n) * n
        while True:
            word = self._next_word()
            if word < limit:
                return word % n

    def sample_distinct(self, n: int, k: int) -> list[int]:
        """k distinct indices drawn uniformly from range(n) (partial Fisher-Yates)."""
        if k > n:
            raise ConfigError(f"cannot draw {k} distinct items from {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def randbytes(self, n: int) -> bytes:
        """n bytes of keystream (whole 8-byte words consumed)."""
        return self.words(-(-n // 8)).tobytes()[:n]


def uniforms_from_words(words: np.ndarray) -> np.ndarray:
    return (words >> _SHIFT11).astype(np.float64) * _INV_2_53


def normals_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Box-Muller: consecutive pairs (u1, u2) -> two normals each."""
    u1 = u[0::2]
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = (2.0 * np.pi) * u2
    out = np.empty(u.shape[0], dtype=np.float64)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out


def derive_rng(secret: Secret, context: str) -> RandomStream:
    """Deterministic stream for (secret, context)."""
    if not isinstance(secret, Secret):
        secret = Secret(secret)
    return RandomStream(stream_key(context, secret.data))


def stream_from_seed(seed: int, label: str, nonce: int = 0) -> RandomStream:
    """Deterministic stream for an integer seed under a domain-separation label."""
    return RandomStream(stream_key(label, str(int(seed)).encode("ascii")), nonce=nonce)
