"""Kernel backends: numpy reference vs compiled path, env-flag selection."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from feynkac import kernels


def _randc(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_hist_dot_reference(rng):
    coef = rng.standard_normal(7)
    hist = _randc(rng, (7, 12))
    exact = sum(coef[l] * hist[l] for l in range(7))
    assert np.allclose(kernels.hist_dot_np(coef, hist), exact, rtol=1e-14)
    assert np.allclose(kernels.hist_dot(coef, hist), exact, rtol=1e-13)


def test_colloc_hist_reference(rng):
    dq = rng.standard_normal(6)
    zpow = _randc(rng, (6, 9))
    hist = _randc(rng, (6, 9))
    exact = sum(dq[l] * zpow[l] * hist[l] for l in range(6))
    assert np.allclose(kernels.colloc_hist_np(dq, zpow, hist), exact, rtol=1e-14)
    assert np.allclose(kernels.colloc_hist(dq, zpow, hist), exact, rtol=1e-13)


def test_lag_dense_combine_reference(rng):
    mats = rng.standard_normal((5, 8, 8))
    hist = _randc(rng, (5, 8))
    exact = sum(mats[l] @ hist[l] for l in range(5))
    assert np.allclose(kernels.lag_dense_combine_np(mats, hist), exact,
                       rtol=1e-13)
    assert np.allclose(kernels.lag_dense_combine(mats, hist), exact, rtol=1e-13)


def test_banded_matvec_reference(rng):
    n, kl, ku = 10, 2, 1
    dense = np.zeros((n, n))
    for i in range(n):
        for j in range(max(0, i - kl), min(n, i + ku + 1)):
            dense[i, j] = rng.standard_normal()
    ab = np.zeros((kl + ku + 1, n))
    for i in range(n):
        for j in range(max(0, i - kl), min(n, i + ku + 1)):
            ab[ku + i - j, j] = dense[i, j]
    x = rng.standard_normal(n)
    exact = dense @ x
    assert np.allclose(kernels.banded_matvec_np(ab, x, kl, ku), exact,
                       rtol=1e-13)
    assert np.allclose(kernels.banded_matvec(ab, x.copy(), kl, ku), exact,
                       rtol=1e-13)


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
def test_compiled_kernels_match_numpy(rng):
    coef = rng.standard_normal(9)
    hist = _randc(rng, (9, 20))
    assert np.allclose(kernels.hist_dot_nb(coef, hist),
                       kernels.hist_dot_np(coef, hist), rtol=1e-13)
    dq = rng.standard_normal(9)
    zpow = _randc(rng, (9, 20))
    assert np.allclose(kernels.colloc_hist_nb(dq, zpow, hist),
                       kernels.colloc_hist_np(dq, zpow, hist), rtol=1e-13)
    mats = rng.standard_normal((4, 11, 11))
    h2 = _randc(rng, (4, 11))
    assert np.allclose(kernels.lag_dense_combine_nb(mats, h2),
                       kernels.lag_dense_combine_np(mats, h2), rtol=1e-13)
    ab = rng.standard_normal((4, 15))
    x = rng.standard_normal(15)
    assert np.allclose(kernels.banded_matvec_nb(ab, x, 2, 1),
                       kernels.banded_matvec_np(ab, x, 2, 1), rtol=1e-13)


def _run_snippet(env_value):
    env = dict(os.environ)
    env["FEYNKAC_NUMBA"] = env_value
    code = ("import feynkac.kernels as k; "
            "print(int(k.NUMBA_ACTIVE), k.hist_dot is k.hist_dot_np)")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env)
    assert out.returncode == 0, out.stderr
    return out.stdout.strip()


def test_env_flag_forces_numpy_backend():
    active, is_np = _run_snippet("off").split()
    assert active == "0" and is_np == "True"


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
def test_env_flag_enables_compiled_backend():
    active, is_np = _run_snippet("on").split()
    assert active == "1" and is_np == "False"


def test_backends_give_identical_solver_results():
    # a full solve must not depend on the kernel backend
    code = """
import os, json
from feynkac.problem import make_problem
from feynkac.stepper import Discretization, run_named_scheme
rep = run_named_scheme("II-PI", make_problem("ex41", alpha=1.6, gamma=0.4,
                                             p=3.0, sigma=2.0),
                       Discretization(d=2, J=5, N=16))
print(json.dumps([rep.err2, rep.err1, rep.maxerr]))
"""
    outs = {}
    for mode in ("off", "auto"):
        env = dict(os.environ)
        env["FEYNKAC_NUMBA"] = mode
        r = subprocess.run([sys.executable, "-c", code], capture_output=True,
                           text=True, env=env)
        assert r.returncode == 0, r.stderr
        outs[mode] = r.stdout.strip()
    a = np.array(json.loads(outs["off"]))
    b = np.array(json.loads(outs["auto"]))
    assert np.allclose(a, b, rtol=1e-12)
