"""Numeric kernels with a compiled core and a pure-numpy fallback.

The compiled extension is built at install time when Cython and a C
compiler are available; otherwise (or when ANONVOICE_NO_EXT=1 is set)
the vectorized numpy implementations are used. Both backends produce
bit-identical output, so results never depend on which one is active.
"""

import os
import sys
from contextlib import contextmanager

import numpy as np

from ..errors import NumericalError
from . import _chacha_np, _jacobi_np

if sys.byteorder != "little":  # pragma: no cover - x86/arm little-endian assumed
    raise ImportError("anonvoice requires a little-endian platform")

try:
    from . import _core
except ImportError:  # pragma: no cover - extension not built
    _core = None

_IMPLS = {"python": (_chacha_np.chacha_blocks, _jacobi_np.jacobi_sweeps)}
if _core is not None:
    _IMPLS["compiled"] = (_core.chacha_blocks, _core.jacobi_sweeps)


def _default_backend():
    if _core is None or os.environ.get("ANONVOICE_NO_EXT", "") not in ("", "0"):
        return "python"
    return "compiled"


_active = _default_backend()


def backend():
    """Name of the active backend: 'compiled' or 'python'."""
    return _active


def available_backends():
    return tuple(sorted(_IMPLS))


def set_backend(name):
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


@contextmanager
def use_backend(name):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def chacha_blocks(key_words, nonces, counters):
    """ChaCha20 keystream blocks: (8,) uint32 key, (N,) uint64 nonces/counters -> (N,16) uint32."""
    return _IMPLS[_active][0](key_words, nonces, counters)


def jacobi_eigh(matrix, rel_tol=1e-12, max_sweeps=60):
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.

    Returns (eigenvalues, components): eigenvalues descending, components
    as rows aligned with them. Rows are sign-canonicalized (largest-magnitude
    entry positive) so results are reproducible across backends.
    """
    a = np.array(matrix, dtype=np.float64, order="C", copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    n = a.shape[0]
    v = np.eye(n, dtype=np.float64)
    # threshold computed once here so both backends see identical bits
    abs_tol = rel_tol * float(np.sqrt(np.sum(a * a)))
    sweeps = _IMPLS[_active][1](a, v, abs_tol, max_sweeps)
    if sweeps < 0:
        raise NumericalError(f"jacobi eigensolver did not converge in {max_sweeps} sweeps")
    eigenvalues = np.diagonal(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    components = np.ascontiguousarray(v[:, order].T)
    for row in components:
        if row[int(np.argmax(np.abs(row)))] < 0.0:
            np.negative(row, out=row)
    return eigenvalues, components
