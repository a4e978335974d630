"""SMO solver backends.

The compiled extension is preferred when importable; the pure-Python
fallback is selected otherwise, or when ``EMG_AFFECT_PURE=1`` is set in the
environment at import time. Both produce identical output for identical
input, which the test suite asserts.
"""

from __future__ import annotations

import os

import numpy as np

from . import smo_py

_FORCE_PURE = os.environ.get("EMG_AFFECT_PURE", "") == "1"

if _FORCE_PURE:
    _impl = smo_py
    _BACKEND = "pure"
else:
    try:
        from . import _smo_cy as _impl  # type: ignore[attr-defined]

        _BACKEND = "compiled"
    except ImportError:
        _impl = smo_py
        _BACKEND = "pure"


def active_backend() -> str:
    """Name of the backend selected at import: 'compiled' or 'pure'."""
    return _BACKEND


def smo_solve(
    K,
    y,
    C: float,
    tol: float = 1e-3,
    max_passes: int = 200,
    seed: int = 0,
    track_objective: bool = False,
):
    """Solve the soft-margin dual for a precomputed kernel matrix.

    Returns ``(alpha, bias, passes, converged, trace)`` where ``trace`` is
    a list of dual-objective values after each accepted step when
    ``track_objective`` is set, else ``None``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("K must be a square matrix")
    if y.ndim != 1 or y.shape[0] != K.shape[0]:
        raise ValueError("y length must match K")
    if y.shape[0] < 2:
        raise ValueError("need at least two rows")
    if C <= 0.0:
        raise ValueError("C must be positive")
    return _impl.smo_solve(K, y, C, tol, max_passes, seed, track_objective)


def solve_pure(K, y, C, tol=1e-3, max_passes=200, seed=0, track_objective=False):
    """Always use the pure backend (benchmarks and parity tests)."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return smo_py.smo_solve(K, y, C, tol, max_passes, seed, track_objective)
