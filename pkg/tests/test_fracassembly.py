"""Structured assembly against brute-force entrywise quadrature."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.sparse

from conftest import brute_stiffness_onesided, graded_cell_points
from feynkac.bspline import SplineSpace
from feynkac.fracassembly import (BandedOp, MemoryBudgetError, QuasiToeplitzOp,
                                  WeightedStiffness, colloc_matrices,
                                  colloc_points, load_vector, mass_1d,
                                  power_cell_integral, power_load,
                                  riesz_stiffness, stiffness_1d, weighted_mass)
from feynkac.quadrature import cell_rule


# ---------------------------------------------------------------------------
# closed-form cell moments
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("e", [-0.7, -0.05, 0.4, 1.6, 2.0])
@pytest.mark.parametrize("s", [0, 1, 2, 3, 4, 9, 60])
@pytest.mark.parametrize("q", [0, 1, 3])
def test_power_cell_integral_matches_adaptive_quadrature(e, s, q):
    if s == 0 and e + q + 1.0 <= 0:
        pytest.skip("divergent")
    exact, _ = scipy.integrate.quad(lambda u: (u + s) ** e * u ** q, 0.0, 1.0,
                                    epsabs=1e-14, epsrel=1e-13)
    got = power_cell_integral(e, s, q)
    assert got == pytest.approx(exact, rel=1e-11, abs=1e-14)


def test_power_cell_integral_rejects_divergent_and_negative():
    with pytest.raises(ValueError):
        power_cell_integral(-1.2, 0, 0)
    with pytest.raises(ValueError):
        power_cell_integral(0.5, -1, 0)


# ---------------------------------------------------------------------------
# operator containers
# ---------------------------------------------------------------------------

def test_quasi_toeplitz_matvec_matches_dense(rng):
    A_l, A_r = stiffness_1d(3, 4, 1.5)
    D = A_l.dense()
    x = rng.standard_normal(A_l.n) + 1j * rng.standard_normal(A_l.n)
    assert np.allclose(A_l.matvec(x), D @ x, rtol=1e-12, atol=1e-12)
    X = rng.standard_normal((A_l.n, 3))
    assert np.allclose(A_l.matvec(X), D @ X, rtol=1e-12, atol=1e-12)
    assert np.allclose(A_r.dense(), D.T, rtol=1e-13)
    assert np.allclose(A_l.T.matvec(x), D.T @ x, rtol=1e-12, atol=1e-12)


def test_quasi_toeplitz_scaled(rng):
    B = riesz_stiffness(2, 4, 1.4)
    x = rng.standard_normal(B.n)
    assert np.allclose(B.scaled(-2.5).matvec(x), -2.5 * B.matvec(x), rtol=1e-13)


def test_banded_op_matvec_solve_roundtrip(rng):
    M = mass_1d(3, 4)
    D = M.dense()
    x = rng.standard_normal(M.n)
    assert np.allclose(M.matvec(x), D @ x, rtol=1e-12)
    z = x + 1j * rng.standard_normal(M.n)
    assert np.allclose(M.matvec(z), D @ z, rtol=1e-12)
    X = rng.standard_normal((M.n, 4))
    assert np.allclose(M.matvec(X), D @ X, rtol=1e-12)
    assert np.allclose(M.solve(M.matvec(x)), x, rtol=1e-10)


def test_banded_from_sparse_rejects_out_of_band_entries():
    bad = scipy.sparse.csr_matrix(np.triu(np.ones((5, 5))))
    with pytest.raises(ValueError):
        BandedOp.from_sparse(bad, 1, 1)


# ---------------------------------------------------------------------------
# stiffness and mass against brute-force quadrature
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("d,J", [(2, 3), (2, 5), (3, 3), (3, 5)])
@pytest.mark.parametrize("alpha", [1.3, 1.5, 1.85])
def test_onesided_stiffness_equals_brute_quadrature(d, J, alpha):
    space = SplineSpace(d, J)
    A_l, A_r = stiffness_1d(d, J, alpha)
    brute = brute_stiffness_onesided(space, alpha, npts=10, levels=20)
    scale = np.max(np.abs(brute))
    assert np.max(np.abs(A_l.dense() - brute)) <= 1e-9 * scale
    assert np.max(np.abs(A_r.dense() - brute.T)) <= 1e-9 * scale


@pytest.mark.parametrize("d", [2, 3])
def test_stiffness_integer_limit_is_laplacian(d):
    # at alpha = 2 the one-sided operator is the (exactly integrable)
    # Galerkin Laplacian -(b_j', b_i')
    J = 4
    space = SplineSpace(d, J)
    xq, wq = cell_rule(space.cell_edges(), 12)
    Dm = space.eval_matrix(xq, deriv=1)
    exact = -(Dm * wq) @ Dm.T
    A_l, _ = stiffness_1d(d, J, 2.0)
    assert np.allclose(A_l.dense(), exact, rtol=1e-11, atol=1e-9)


@pytest.mark.parametrize("d,alpha", [(2, 1.5), (3, 1.2), (3, 1.8)])
def test_riesz_stiffness_symmetric_positive_combination(d, alpha):
    J = 4
    B = riesz_stiffness(d, J, alpha)
    A_l, A_r = stiffness_1d(d, J, alpha)
    combo = (A_l.dense() + A_r.dense()) / (2.0 * math.cos(math.pi * alpha / 2.0))
    Bd = B.dense()
    assert np.allclose(Bd, combo, rtol=1e-12, atol=1e-9)
    assert np.allclose(Bd, Bd.T, rtol=1e-12, atol=1e-10)
    assert np.linalg.eigvalsh(Bd).min() > 0.0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_mass_matrix_is_exact_gram(d):
    J = 3
    space = SplineSpace(d, J)
    xq, wq = cell_rule(space.cell_edges(), 2 * d)
    E = space.eval_matrix(xq)
    exact = (E * wq) @ E.T
    M = mass_1d(d, J)
    assert np.allclose(M.dense(), exact, rtol=1e-12, atol=1e-13)


def test_weighted_mass_matches_diagonal_weighting(rng):
    space = SplineSpace(2, 4)
    xq, wq = cell_rule(space.cell_edges(), 10)
    E = space.eval_sparse(xq)
    wvals = 1.0 + 0.3 * np.sin(2.0 * np.pi * xq)
    W = weighted_mass(space, wvals, xq, wq, E).toarray()
    Ed = E.toarray()
    exact = (Ed * (wq * wvals)) @ Ed.T
    assert np.allclose(W, exact, rtol=1e-12)


# ---------------------------------------------------------------------------
# weighted fractional stiffness
# ---------------------------------------------------------------------------

def test_weighted_stiffness_unit_weight_recovers_riesz_form():
    d, J, alpha = 2, 4, 1.6
    ws = WeightedStiffness(d, J, alpha)
    ones = np.ones_like(ws.xq)
    got = ws.assemble(ones, np.zeros_like(ws.xq))
    ref = riesz_stiffness(d, J, alpha).dense()
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(got - ref)) <= 1e-7 * scale


def test_weighted_stiffness_banded_limit_at_alpha_two():
    d, J = 2, 4
    ws = WeightedStiffness(d, J, 2.0)
    got = ws.assemble(np.ones_like(ws.xq), np.zeros_like(ws.xq)).dense()
    ref = riesz_stiffness(d, J, 2.0).dense()
    assert np.allclose(got, ref, rtol=1e-11, atol=1e-9)


def test_weighted_stiffness_memory_budget_guard():
    with pytest.raises(MemoryBudgetError):
        WeightedStiffness(2, 6, 1.5, budget_bytes=1e3)


# ---------------------------------------------------------------------------
# load vectors
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("expo,tol", [(2.0, 1e-11), (0.7, 1e-9), (-0.5, 2e-5)])
def test_power_load_against_graded_quadrature(expo, tol):
    space = SplineSpace(3, 4)
    xq, wq = graded_cell_points(space, npts=10, levels=18)
    E = space.eval_matrix(xq)
    brute = E @ (wq * xq ** expo)
    got = power_load(3, 4, expo, "left")
    assert np.max(np.abs(got - brute)) <= tol * np.max(np.abs(brute))


def test_power_load_right_mirrors_left():
    left = power_load(2, 4, 1.3, "left")
    right = power_load(2, 4, 1.3, "right")
    assert np.allclose(right, left[::-1], rtol=1e-14)


def test_power_load_validation():
    with pytest.raises(ValueError):
        power_load(2, 4, -1.0)
    with pytest.raises(ValueError):
        power_load(2, 4, 0.5, side="middle")


def test_load_vector_combines_smooth_and_singular_parts():
    space = SplineSpace(2, 4)
    smooth = load_vector(space, lambda x: np.cos(x), npts=16)
    xq, wq = cell_rule(space.cell_edges(), 16)
    E = space.eval_sparse(xq)
    assert np.allclose(smooth, E @ (wq * np.cos(xq)), rtol=1e-13)
    combo = load_vector(space, lambda x: np.cos(x),
                        singular=((2.0 + 1j, 0.7, "left"),), npts=16)
    assert np.iscomplexobj(combo)
    assert np.allclose(combo, smooth + (2.0 + 1j) * power_load(2, 4, 0.7),
                       rtol=1e-13)


# ---------------------------------------------------------------------------
# collocation pieces
# ---------------------------------------------------------------------------

def test_colloc_points_layout():
    J = 4
    x = colloc_points(J)
    n = 2 ** J
    assert x.size == n + 1
    assert x[0] == pytest.approx(0.5 / n)
    assert x[-1] == pytest.approx(1.0 - 0.5 / n)
    assert np.all(np.diff(x) > 0)


def test_colloc_matrices_consistent_with_space():
    J, alpha = 3, 1.6
    E, A_L, A_R, x = colloc_matrices(J, alpha)
    space = SplineSpace(4, J)
    assert E.shape == (x.size, space.dim)
    assert np.allclose(E, space.eval_matrix(x).T, rtol=1e-13)
    assert np.allclose(A_L, space.frac_matrix(x, alpha).T, rtol=1e-13)
    assert np.allclose(A_R, A_L[::-1, ::-1], rtol=1e-15)
