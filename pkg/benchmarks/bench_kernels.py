"""Compare the compiled kernel backend against the pure numpy/scipy one.

Micro-benchmarks time the three hot kernels directly; the end-to-end row
re-runs a fixed 2D integration in a subprocess with ROACHLAB_PURE_PYTHON=1
so the import-time backend selection is exercised for real.

Usage: python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from roachlab import kernels


def timeit(fn, *args, repeat=5, inner=20):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_micro():
    rng = np.random.default_rng(0)
    rows = []

    m = 256
    dl = -np.ones(m - 1) * 0.3
    d = 2.0 + rng.random(m)
    du = -np.ones(m - 1) * 0.3
    b = rng.standard_normal(m)
    rows.append((
        "tridiag_solve (m=256)",
        timeit(kernels.tridiag_solve_numpy, dl, d, du, b, inner=200),
        timeit(kernels.tridiag_solve, dl, d, du, b, inner=200),
    ))

    B, m = 128, 128
    dlb = -0.3 * np.ones((B, m - 1))
    db = 2.0 + rng.random((B, m))
    dub = -0.3 * np.ones((B, m - 1))
    bb = rng.standard_normal((B, m))
    rows.append((
        "tridiag_solve_batch (128x128)",
        timeit(kernels.tridiag_solve_batch_numpy, dlb, db, dub, bb),
        timeit(kernels.tridiag_solve_batch, dlb, db, dub, bb),
    ))

    shape = (128, 128)
    u1 = rng.random(shape)
    u2 = rng.random(shape)
    qv = rng.uniform(0.2, 0.8, shape)
    pv = 1.0 - qv
    rows.append((
        "exchange_relax (128^2)",
        timeit(kernels.exchange_relax_numpy, u1, u2, qv, pv, 2.0),
        timeit(kernels.exchange_relax, u1, u2, qv, pv, 2.0),
    ))
    return rows


_END_TO_END = r"""
import time
import numpy as np
from roachlab import kernels
from roachlab.grid import Grid
from roachlab.model import ModelParams, constant_steady_conserved
from roachlab.rd3 import StepControl, constant_state, run

params = ModelParams()
grid = Grid(2, 128)
state = constant_state(grid, constant_steady_conserved(1.0, params))
rng = np.random.Generator(np.random.Philox(key=1))
state.v = state.v + 0.01 * (2 * rng.random(grid.shape) - 1)
t0 = time.perf_counter()
run(state, params, StepControl(dt=0.01), t_end=5.0, series_stride=50)
print(f"{kernels.backend()} {time.perf_counter() - t0:.3f}")
"""


def bench_end_to_end():
    results = {}
    for pure in ("0", "1"):
        env = dict(os.environ, ROACHLAB_PURE_PYTHON=pure)
        out = subprocess.run(
            [sys.executable, "-c", _END_TO_END], env=env,
            capture_output=True, text=True, check=True,
        ).stdout.split()
        results[out[0]] = float(out[1])
    return results


def main():
    print(f"active backend: {kernels.backend()}")
    if not kernels.compiled_available():
        print("compiled extension not built; micro rows compare numpy to itself")
    print(f"{'kernel':32s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, t_np, t_c in bench_micro():
        print(f"{name:32s} {t_np * 1e6:8.1f}us {t_c * 1e6:8.1f}us {t_np / t_c:7.2f}x")
    e2e = bench_end_to_end()
    if len(e2e) == 2:
        t_np, t_c = e2e["numpy"], e2e["compiled"]
        print(f"{'2D run 128^2, 500 steps':32s} {t_np:8.2f}s  {t_c:8.2f}s  {t_np / t_c:7.2f}x")
    else:
        print(f"2D run: only one backend available: {e2e}")


if __name__ == "__main__":
    main()
