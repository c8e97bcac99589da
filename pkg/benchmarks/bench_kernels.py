"""Benchmark the numba kernels against their pure-numpy fallbacks.

The implementation is selected by FEYNKAC_NUMBA at import time, so this
script re-imports the kernels module under both settings in subprocesses
and reports per-kernel timings side by side.

Usage: python benchmarks/bench_kernels.py [--sizes small|large]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import textwrap

_WORKER = textwrap.dedent("""
    import json, sys, timeit
    import numpy as np

    from feynkac import kernels

    rng = np.random.default_rng(7)
    n, m, band = {n}, {m}, 7
    coef = rng.standard_normal(n)
    hist = rng.standard_normal((n, m))
    zpow = np.exp(1j * rng.standard_normal((n, m)))
    dq = rng.standard_normal(n)
    shist = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    ab = rng.standard_normal((band, m))
    x = rng.standard_normal(m)
    mats = rng.standard_normal((n, 8, 8))
    vecs = rng.standard_normal((n, 8))

    cases = {{
        "hist_dot": lambda: kernels.hist_dot(coef, hist),
        "colloc_hist": lambda: kernels.colloc_hist(dq, zpow, shist),
        "banded_matvec": lambda: kernels.banded_matvec(ab, x, 3, 3),
        "lag_dense_combine": lambda: kernels.lag_dense_combine(mats, vecs),
    }}
    out = {{"backend": "numba" if kernels.NUMBA_ACTIVE else "numpy"}}
    for name, fn in cases.items():
        fn()  # warm-up / JIT
        reps = max(3, int(2e7 / (n * m)))
        out[name] = min(timeit.repeat(fn, number=reps, repeat=3)) / reps
    print(json.dumps(out))
""")


def run_worker(numba_flag: str, n: int, m: int) -> dict:
    env = dict(os.environ, FEYNKAC_NUMBA=numba_flag)
    code = _WORKER.format(n=n, m=m)
    res = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", choices=("small", "large"), default="large")
    args = ap.parse_args()
    n, m = (512, 64) if args.sizes == "small" else (4096, 128)
    print(f"history length n={n}, width m={m}")
    numpy_res = run_worker("0", n, m)
    numba_res = run_worker("1", n, m)
    if numba_res["backend"] != "numba":
        print("note: numba unavailable; both columns use numpy")
    names = [k for k in numpy_res if k != "backend"]
    print(f"{'kernel':<20}{'numpy (us)':>12}{'numba (us)':>12}{'speedup':>9}")
    for name in names:
        tn = numpy_res[name] * 1e6
        tb = numba_res[name] * 1e6
        print(f"{name:<20}{tn:>12.2f}{tb:>12.2f}{tn / tb:>9.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
