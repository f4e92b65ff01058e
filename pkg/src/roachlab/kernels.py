"""Hot per-step numerical kernels with optional compiled backend.

The compiled extension (``roachlab._speedups``) implements the same three
functions in Cython; it is picked automatically at import when available.
Set ``ROACHLAB_PURE_PYTHON=1`` to force the numpy/scipy implementations.
Run ``benchmarks/bench_kernels.py`` to compare the two backends.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import solve_banded


def tridiag_solve_numpy(dl: np.ndarray, d: np.ndarray, du: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a single tridiagonal system; ``b`` may be (m,) or (m, nrhs)."""
    m = d.shape[0]
    ab = np.zeros((3, m))
    ab[0, 1:] = du
    ab[1, :] = d
    ab[2, :-1] = dl
    return solve_banded((1, 1), ab, b, check_finite=False)


def tridiag_solve_batch_numpy(
    dl: np.ndarray, d: np.ndarray, du: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Solve B independent tridiagonal systems of size m.

    Bands are (B, m-1)/(B, m)/(B, m-1), right-hand sides (B, m).  Thomas
    sweeps vectorised across the batch axis (no pivoting; intended for the
    diagonally dominant systems arising from implicit diffusion).
    """
    B, m = b.shape
    cp = np.empty((B, m - 1))
    x = np.empty((B, m))
    cp[:, 0] = du[:, 0] / d[:, 0]
    x[:, 0] = b[:, 0] / d[:, 0]
    for i in range(1, m):
        denom = d[:, i] - dl[:, i - 1] * cp[:, i - 1]
        if i < m - 1:
            cp[:, i] = du[:, i] / denom
        x[:, i] = (b[:, i] - dl[:, i - 1] * x[:, i - 1]) / denom
    for i in range(m - 2, -1, -1):
        x[:, i] -= cp[:, i] * x[:, i + 1]
    return x


def exchange_relax_numpy(
    u1: np.ndarray, u2: np.ndarray, qv: np.ndarray, pv: np.ndarray, c: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact relaxation of the frozen-v exchange ODE over a time window.

    Integrates u1' = -(q u1 - p u2)/eps, u2' = +(q u1 - p u2)/eps exactly
    with ``c = dt/eps``: the total u1+u2 is invariant and the imbalance
    q u1 - p u2 decays by exp(-(p+q) c).
    """
    total = pv + qv
    s = u1 + u2
    w = (qv * u1 - pv * u2) * np.exp(-c * total)
    return (pv * s + w) / total, (qv * s - w) / total


_IMPLS_NUMPY = {
    "tridiag_solve": tridiag_solve_numpy,
    "tridiag_solve_batch": tridiag_solve_batch_numpy,
    "exchange_relax": exchange_relax_numpy,
}

_force_pure = os.environ.get("ROACHLAB_PURE_PYTHON", "") not in ("", "0")

try:
    from roachlab import _speedups
except ImportError:  # extension not built; numpy path stays active
    _speedups = None

if _speedups is not None and not _force_pure:
    _BACKEND = "compiled"
    tridiag_solve = _speedups.tridiag_solve
    tridiag_solve_batch = _speedups.tridiag_solve_batch
    exchange_relax = _speedups.exchange_relax
else:
    _BACKEND = "numpy"
    tridiag_solve = tridiag_solve_numpy
    tridiag_solve_batch = tridiag_solve_batch_numpy
    exchange_relax = exchange_relax_numpy


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'numpy'."""
    return _BACKEND


def compiled_available() -> bool:
    return _speedups is not None
