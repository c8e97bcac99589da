"""Computational kernels with optional numba acceleration.

The hot inner loops of the time-marching schemes (history combinations,
per-node exponentially weighted sums, banded applications) are available
in two interchangeable implementations:

* pure numpy (BLAS/einsum based), always available;
* numba ``@njit`` compiled loops, used when numba is importable.

The environment variable ``FEYNKAC_NUMBA`` selects the active path:

* ``auto`` (default) -- numba if importable, else numpy;
* ``1``/``on``/``true`` -- require numba, raise if missing;
* ``0``/``off``/``false`` -- force the numpy fallbacks.

Both implementations are exported (``*_np`` and, when compiled, ``*_nb``)
so they can be benchmarked against each other; the unsuffixed names bind
to the selected path.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "NUMBA_ACTIVE",
    "hist_dot",
    "colloc_hist",
    "lag_dense_combine",
    "banded_matvec",
    "hist_dot_np",
    "colloc_hist_np",
    "lag_dense_combine_np",
    "banded_matvec_np",
]

_MODE = os.environ.get("FEYNKAC_NUMBA", "auto").strip().lower()

if _MODE in ("0", "off", "false", "no"):
    _numba = None
elif _MODE in ("1", "on", "true", "yes"):
    import numba as _numba
else:
    try:
        import numba as _numba
    except ImportError:  # pragma: no cover - environment dependent
        _numba = None

HAVE_NUMBA = _numba is not None
NUMBA_ACTIVE = HAVE_NUMBA

_threads = os.environ.get("FEYNKAC_THREADS")
if HAVE_NUMBA and _threads:
    try:
        _numba.set_num_threads(max(1, min(int(_threads), _numba.config.NUMBA_NUM_THREADS)))
    except (ValueError, RuntimeError):
        pass


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def hist_dot_np(coef, hist):
    """Weighted combination of history rows.

    Parameters
    ----------
    coef : (L,) array
        Lag coefficients.
    hist : (L, m) array
        Stacked coefficient vectors, one row per lag.

    Returns
    -------
    (m,) array
        ``sum_l coef[l] * hist[l, :]``.
    """
    return np.asarray(coef) @ np.asarray(hist)


def colloc_hist_np(dq, zpow, hist):
    """Per-node exponentially weighted history combination.

    Parameters
    ----------
    dq : (L,) real array
        Lag weights.
    zpow : (L, m) array
        Per-node lag factors ``z_i**l`` (row ``l`` holds the ``l``-th power).
    hist : (L, m) array
        History rows aligned with ``dq`` and ``zpow``.

    Returns
    -------
    (m,) array
        ``sum_l dq[l] * zpow[l, :] * hist[l, :]``.
    """
    return np.einsum("l,lm,lm->m", dq, zpow, hist, optimize=True)


def lag_dense_combine_np(mats, hist):
    """Accumulate ``sum_l mats[l] @ hist[l]`` over stacked square matrices."""
    return np.einsum("lij,lj->i", mats, hist, optimize=True)


def banded_matvec_np(ab, x, kl, ku):
    """Multiply a matrix stored in LAPACK band format by a vector.

    ``ab[ku + i - j, j]`` holds entry ``(i, j)``; ``kl``/``ku`` are the lower
    and upper bandwidths.
    """
    n = x.shape[0]
    out = np.zeros(n, dtype=np.result_type(ab.dtype, x.dtype))
    for d in range(-kl, ku + 1):
        diag = ab[ku - d, max(d, 0):min(n, n + d)]
        if d >= 0:
            out[: n - d] += diag * x[d:]
        else:
            out[-d:] += diag * x[: n + d]
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _njit = _numba.njit(cache=True, fastmath=False)

    @_njit
    def _hist_dot_nb(coef, hist):
        L, m = hist.shape
        out = np.zeros(m, dtype=hist.dtype)
        for l in range(L):
            c = coef[l]
            for j in range(m):
                out[j] += c * hist[l, j]
        return out

    @_njit
    def _colloc_hist_nb(dq, zpow, hist):
        L, m = hist.shape
        out = np.zeros(m, dtype=hist.dtype)
        for l in range(L):
            c = dq[l]
            for j in range(m):
                out[j] += c * zpow[l, j] * hist[l, j]
        return out

    @_njit
    def _lag_dense_combine_nb(mats, hist):
        L, n, _ = mats.shape
        out = np.zeros(n, dtype=mats.dtype)
        for l in range(L):
            for i in range(n):
                acc = out[i]
                for j in range(n):
                    acc += mats[l, i, j] * hist[l, j]
                out[i] = acc
        return out

    @_njit
    def _banded_matvec_nb(ab, x, kl, ku):
        n = x.shape[0]
        out = np.zeros(n, dtype=ab.dtype)
        for i in range(n):
            lo = max(0, i - kl)
            hi = min(n, i + ku + 1)
            acc = out[i]
            for j in range(lo, hi):
                acc += ab[ku + i - j, j] * x[j]
            out[i] = acc
        return out

    def hist_dot_nb(coef, hist):
        coef = np.ascontiguousarray(coef)
        hist = np.ascontiguousarray(hist)
        if coef.dtype != hist.dtype:
            dt = np.result_type(coef.dtype, hist.dtype)
            coef = coef.astype(dt)
            hist = hist.astype(dt)
        return _hist_dot_nb(coef, hist)

    def colloc_hist_nb(dq, zpow, hist):
        dt = np.result_type(zpow.dtype, hist.dtype)
        return _colloc_hist_nb(
            np.ascontiguousarray(dq, dtype=np.float64),
            np.ascontiguousarray(zpow, dtype=dt),
            np.ascontiguousarray(hist, dtype=dt),
        )

    def lag_dense_combine_nb(mats, hist):
        dt = np.result_type(mats.dtype, hist.dtype)
        return _lag_dense_combine_nb(
            np.ascontiguousarray(mats, dtype=dt),
            np.ascontiguousarray(hist, dtype=dt),
        )

    def banded_matvec_nb(ab, x, kl, ku):
        dt = np.result_type(ab.dtype, x.dtype)
        return _banded_matvec_nb(
            np.ascontiguousarray(ab, dtype=dt),
            np.ascontiguousarray(x, dtype=dt),
            kl,
            ku,
        )

    hist_dot = hist_dot_nb
    colloc_hist = colloc_hist_nb
    lag_dense_combine = lag_dense_combine_nb
    banded_matvec = banded_matvec_nb
else:
    hist_dot = hist_dot_np
    colloc_hist = colloc_hist_np
    lag_dense_combine = lag_dense_combine_np
    banded_matvec = banded_matvec_np
