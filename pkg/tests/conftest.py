"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def observed_rates(errs, xs):
    """Convergence rates ``log(e_i/e_{i+1}) / log(x_{i+1}/x_i)``."""
    errs = np.asarray(errs, dtype=float)
    xs = np.asarray(xs, dtype=float)
    return np.log(errs[:-1] / errs[1:]) / np.log(xs[1:] / xs[:-1])


def graded_cell_points(space, npts=8, levels=14):
    """Per-cell edge-graded quadrature covering [0, 1]."""
    from feynkac.quadrature import edge_graded_rule

    edges = space.cell_edges()
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = edge_graded_rule(lo, hi, npts=npts, levels=levels)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def brute_stiffness_onesided(space, alpha, npts=8, levels=14):
    """Entrywise quadrature of ``A[i, j] = -(D^{alpha-1} b_j, b_i')``.

    Independent of the structured assembly: fractional traces and basis
    derivatives are sampled pointwise and contracted against an edge-graded
    composite rule that resolves the algebraic kinks at the knots.
    """
    xq, wq = graded_cell_points(space, npts, levels)
    F = space.frac_matrix(xq, alpha - 1.0)
    D = space.eval_matrix(xq, deriv=1)
    return -(D * wq) @ F.T
