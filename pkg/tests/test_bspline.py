"""Spline spaces: evaluation, fractional traces, refinement, wavelets."""

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from feynkac.bspline import (SplineSpace, fwt_forward, fwt_inverse,
                             fwt_synthesis_T, multiscale_block_sizes,
                             refinement_matrices, tensor_fwt)
from feynkac.fracassembly import load_vector, mass_1d


DIMS = {2: lambda J: 2 ** J - 1, 3: lambda J: 2 ** J}


@pytest.mark.parametrize("d", [2, 3, 4])
def test_partition_of_unity_away_from_boundary(d):
    J = 5
    space = SplineSpace(d, J)
    margin = d * 2.0 ** -J
    xs = np.linspace(margin, 1.0 - margin, 101)
    sums = 2.0 ** (-J / 2.0) * space.eval_matrix(xs).sum(axis=0)
    assert np.allclose(sums, 1.0, atol=1e-12)


@pytest.mark.parametrize("d,J", [(2, 4), (2, 6), (3, 3), (3, 5)])
def test_galerkin_space_dimension(d, J):
    assert SplineSpace(d, J).dim == DIMS[d](J)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_basis_vanishes_at_domain_endpoints(d):
    space = SplineSpace(d, 4)
    vals = space.eval_matrix(np.array([0.0, 1.0]))
    assert np.max(np.abs(vals)) < 1e-12


def _project(space, f):
    M = mass_1d(space.d, space.J)
    return M.solve(load_vector(space, f, npts=20))


def test_projection_reproduces_representable_function_order2():
    # piecewise-linear space contains the tent function min(x, 1-x)
    space = SplineSpace(2, 5)
    c = _project(space, lambda x: np.minimum(x, 1.0 - x))
    xs = np.linspace(0.0, 1.0, 501)
    vals = c @ space.eval_matrix(xs)
    assert np.allclose(vals, np.minimum(xs, 1.0 - xs), atol=1e-12)


def test_projection_reproduces_representable_function_order3():
    # quadratic space with zero boundary values contains x(1-x)
    space = SplineSpace(3, 4)
    c = _project(space, lambda x: x * (1.0 - x))
    xs = np.linspace(0.0, 1.0, 501)
    vals = c @ space.eval_matrix(xs)
    assert np.allclose(vals, xs * (1.0 - xs), atol=1e-12)


def test_projection_reproduces_representable_function_order4():
    # cubic space contains x^2 (1-x)
    space = SplineSpace(4, 4)
    c = _project(space, lambda x: x ** 2 * (1.0 - x))
    xs = np.linspace(0.0, 1.0, 501)
    vals = c @ space.eval_matrix(xs)
    assert np.allclose(vals, xs ** 2 * (1.0 - xs), atol=1e-11)


def test_eval_matrix_derivative_by_differencing():
    space = SplineSpace(3, 4)
    xs = np.linspace(0.07, 0.93, 41)
    knots = space.cell_edges()
    xs = xs[np.min(np.abs(xs[:, None] - knots[None, :]), axis=1) > 1e-3]
    h = 1e-6
    fd = (space.eval_matrix(xs + h) - space.eval_matrix(xs - h)) / (2.0 * h)
    assert np.allclose(space.eval_matrix(xs, deriv=1), fd, atol=1e-5)


def test_eval_sparse_agrees_with_dense():
    space = SplineSpace(3, 5)
    xs = np.linspace(0.0, 1.0, 200)
    dense = space.eval_matrix(xs)
    sparse = space.eval_sparse(xs).toarray()
    assert np.allclose(dense, sparse, atol=1e-11)


@pytest.mark.parametrize("mu", [0.35, 0.8])
def test_left_fractional_trace_on_representable_function(mu):
    # for u = x - x^2 in the space, D^mu u has the two-term closed form
    space = SplineSpace(3, 5)
    c = _project(space, lambda x: x * (1.0 - x))
    xs = np.linspace(0.02, 0.98, 79)
    got = c @ space.frac_matrix(xs, mu)
    exact = (xs ** (1.0 - mu) / gamma_fn(2.0 - mu)
             - 2.0 * xs ** (2.0 - mu) / gamma_fn(3.0 - mu))
    assert np.allclose(got, exact, atol=1e-10)


@pytest.mark.parametrize("mu", [0.35, 0.8])
def test_right_fractional_trace_on_representable_function(mu):
    # right-sided derivative of the symmetric u = x - x^2 mirrors the left one
    space = SplineSpace(3, 5)
    c = _project(space, lambda x: x * (1.0 - x))
    xs = np.linspace(0.02, 0.98, 79)
    got = c @ space.frac_matrix_right(xs, mu)
    y = 1.0 - xs
    exact = (y ** (1.0 - mu) / gamma_fn(2.0 - mu)
             - 2.0 * y ** (2.0 - mu) / gamma_fn(3.0 - mu))
    assert np.allclose(got, exact, atol=1e-10)


def test_fractional_trace_piecewise_linear_closed_form():
    # tent function min(x, 1-x) = x - 2 (x - 1/2)_+ gives
    # D^mu u = [x^{1-mu} - 2 (x-1/2)_+^{1-mu}] / Gamma(2-mu)
    mu = 0.55
    space = SplineSpace(2, 4)
    c = _project(space, lambda x: np.minimum(x, 1.0 - x))
    xs = np.linspace(0.03, 0.97, 61)
    got = c @ space.frac_matrix(xs, mu)
    plus = np.clip(xs - 0.5, 0.0, None)
    exact = (xs ** (1.0 - mu) - 2.0 * plus ** (1.0 - mu)) / gamma_fn(2.0 - mu)
    assert np.allclose(got, exact, atol=1e-10)


def test_two_scale_refinement_represents_same_function(rng):
    for d in (2, 3):
        j = 3
        pair = refinement_matrices(d, j)
        coarse = SplineSpace(d, j)
        fine = SplineSpace(d, j + 1)
        c = rng.standard_normal(coarse.dim)
        xs = np.linspace(0.0, 1.0, 257)
        f_c = c @ coarse.eval_matrix(xs)
        f_f = (pair.M0 @ c) @ fine.eval_matrix(xs)
        assert np.allclose(f_c, f_f, atol=1e-12)


def _dense(A):
    return A.toarray() if hasattr(A, "toarray") else np.asarray(A)


def test_wavelet_columns_complement_scaling_space():
    # M = [M0 M1] must be square and invertible: multiscale synthesis is a
    # change of basis on the fine space
    pair = refinement_matrices(2, 4)
    M = np.hstack([_dense(pair.M0), _dense(pair.M1)])
    assert M.shape[0] == M.shape[1]
    assert np.linalg.matrix_rank(M) == M.shape[0]


def test_multiscale_block_sizes_partition_dimension():
    for J0, J in ((2, 5), (3, 7), (2, 2)):
        sizes = multiscale_block_sizes(J0, J)
        assert sizes[0] == 2 ** J0 - 1
        assert sum(sizes) == 2 ** J - 1


@pytest.mark.parametrize("J0,J", [(2, 5), (3, 8), (2, 2)])
def test_fwt_round_trip(rng, J0, J):
    x = rng.standard_normal(2 ** J - 1)
    v = fwt_forward(x, J0, J)
    back = fwt_inverse(v, J0, J)
    assert np.max(np.abs(back - x)) < 1e-12
    w = fwt_inverse(x, J0, J)
    again = fwt_forward(w, J0, J)
    assert np.max(np.abs(again - x)) < 1e-12


def test_fwt_synthesis_transpose_adjoint(rng):
    J0, J = 2, 6
    n = 2 ** J - 1
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    lhs = np.dot(fwt_inverse(x, J0, J), y)
    rhs = np.dot(x, fwt_synthesis_T(y, J0, J))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_fwt_rejects_unsupported_order(rng):
    with pytest.raises(ValueError):
        fwt_forward(np.zeros(7), 2, 3, d=3)


def test_tensor_fwt_round_trip(rng):
    J0, J = 2, 5
    n = 2 ** J - 1
    C = rng.standard_normal((n, n))
    V = tensor_fwt(C, J0, J)
    back = tensor_fwt(V, J0, J, inverse=True)
    assert np.max(np.abs(back - C)) < 1e-12
