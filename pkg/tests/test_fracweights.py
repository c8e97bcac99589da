"""Weight families, time grids, and the discrete substantial operator."""

import numpy as np
import pytest
from scipy.special import binom, gamma as gamma_fn

from conftest import observed_rates
from feynkac.fracweights import (TimeGrid, WeightTable, fbdf_Q,
                                 grunwald_weights, pi_Q, substantial_apply)


# ---------------------------------------------------------------------------
# time grids
# ---------------------------------------------------------------------------

def test_uniform_grid_properties():
    grid = TimeGrid.uniform(0.5, 10)
    assert grid.N == 10
    assert grid.T == 0.5
    assert grid.tau == pytest.approx(0.05)
    assert np.allclose(grid.steps, 0.05)


def test_graded_grid_concentrates_near_zero():
    grid = TimeGrid.graded(1.0, 8, 2.0)
    assert np.allclose(grid.nodes, (np.arange(9) / 8.0) ** 2)
    steps = grid.steps
    assert np.all(np.diff(steps) > 0)          # steps grow away from t=0
    with pytest.raises(ValueError):
        grid.tau                               # no constant step


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.1, 0.2]))         # must start at 0
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.2, 0.2]))    # strictly increasing


# ---------------------------------------------------------------------------
# weight sequences against closed forms
# ---------------------------------------------------------------------------

def test_grunwald_weights_binomial_closed_form():
    gamma, tau, n = 0.6, 0.05, 40
    w = grunwald_weights(gamma, tau, n)
    j = np.arange(n + 1)
    exact = tau ** -gamma * (-1.0) ** j * binom(gamma, j)
    assert np.allclose(w, exact, rtol=1e-13)


def test_fbdf_Q_is_partial_sum_of_grunwald_weights():
    gamma, tau, N = 0.35, 0.02, 60
    table = fbdf_Q(gamma, tau, N)
    w = grunwald_weights(gamma, tau, N)
    assert np.allclose(table.Q, np.cumsum(w)[:N], rtol=1e-12)
    # closed form Q_n = tau^{-gamma} (-1)^n C(gamma-1, n)
    n = np.arange(N)
    exact = tau ** -gamma * (-1.0) ** n * binom(gamma - 1.0, n)
    assert np.allclose(table.Q, exact, rtol=1e-12)


def test_pi_Q_uniform_closed_form():
    gamma, T, N = 0.7, 0.5, 50
    grid = TimeGrid.uniform(T, N)
    tau = grid.tau
    table = pi_Q(gamma, grid, N)
    j = np.arange(N)
    exact = (tau ** -gamma / gamma_fn(2.0 - gamma)
             * ((j + 1.0) ** (1.0 - gamma) - j ** (1.0 - gamma)))
    assert np.allclose(table.Q, exact, rtol=1e-12)


def test_pi_Q_graded_matches_direct_integration():
    # Q~_j = int over the j-th back-step of (t_n - s)^{-gamma} ds
    #        / (Gamma(1-gamma) * step)  -- evaluated in closed form here
    gamma, N, n = 0.45, 12, 9
    grid = TimeGrid.graded(0.8, N, 2.5)
    table = pi_Q(gamma, grid, n)
    t = grid.nodes
    g = 1.0 - gamma
    for jj in range(n):
        hi, lo = t[n] - t[n - 1 - jj], t[n] - t[n - jj]
        exact = (hi ** g - lo ** g) / (gamma_fn(2.0 - gamma) * (hi - lo))
        assert table.Q[jj] == pytest.approx(exact, rel=1e-12)


def test_L_sequence_closed_form():
    gamma, tau, N = 0.5, 0.1, 20
    table = fbdf_Q(gamma, tau, N)
    n = np.arange(1, N + 1)
    exact = (n * tau) ** -gamma / gamma_fn(1.0 - gamma)
    assert table.L[0] == table.Q[0]
    assert np.allclose(table.L[1:], exact, rtol=1e-13)


@pytest.mark.parametrize("family", ["FBDF", "PI"])
@pytest.mark.parametrize("gamma", [0.25, 0.6, 0.85])
def test_weight_chain_monotone(family, gamma):
    # L_{n+1} < Q_n <= L_n, Q positive decreasing (moderate n; the
    # acceptance suite extends this to n = 10^4)
    N = 1500
    if family == "FBDF":
        table = fbdf_Q(gamma, 0.01, N)
    else:
        table = pi_Q(gamma, TimeGrid.uniform(0.01 * N, N), N)
    Q, L = table.Q, table.L
    assert np.all(Q > 0)
    assert np.all(np.diff(Q) < 0)
    assert np.all(L[1:] < Q)            # L_{n+1} < Q_n
    assert np.all(Q <= L[:-1] * (1 + 1e-15))   # Q_n <= L_n


def test_weight_table_rejects_nonmonotone_Q():
    with pytest.raises(ValueError):
        WeightTable("X", 0.5, np.array([1.0, 1.5]), np.array([1.0, 0.9, 0.8]),
                    np.array([1.0, 0.5]))


def test_fbdf_asymptotics_approach_L():
    # tau^gamma Q_{n-1} -> n^{-gamma}/Gamma(1-gamma) for large n
    gamma, tau = 0.4, 0.05
    table = fbdf_Q(gamma, tau, 4000)
    n = 4000 - 1
    lead = n ** -gamma / gamma_fn(1.0 - gamma)
    assert tau ** gamma * table.Q[n - 1] == pytest.approx(lead, rel=2e-3)


# ---------------------------------------------------------------------------
# discrete substantial operator
# ---------------------------------------------------------------------------

def test_substantial_apply_small_history_by_hand():
    gamma, tau, N = 0.5, 0.1, 6
    grid = TimeGrid.uniform(tau * N, N)
    table = fbdf_Q(gamma, tau, N)
    V = np.array([1.0, -2.0, 0.5])
    pU = 0.7
    Q, L = table.Q, table.L
    z = np.exp(-pU * tau)
    # n = 2: Q_0 V_2 + z (Q_1 - Q_0) V_1 - z^2 (Q_1 [- L_2]) V_0
    expected_plain = Q[0] * V[2] + z * (Q[1] - Q[0]) * V[1] - z ** 2 * Q[1] * V[0]
    expected_corr = expected_plain + z ** 2 * L[2] * V[0]
    got_plain = substantial_apply(table, grid, pU, V, l_correction=False)
    got_corr = substantial_apply(table, grid, pU, V, l_correction=True)
    assert got_plain == pytest.approx(expected_plain, rel=1e-14)
    assert got_corr == pytest.approx(expected_corr, rel=1e-14)


def test_substantial_apply_vector_rate_matches_scalar(rng):
    gamma, tau, N, m = 0.3, 0.05, 8, 5
    grid = TimeGrid.uniform(tau * N, N)
    table = pi_Q(gamma, grid, N)
    H = rng.standard_normal((N + 1, m))
    pU = 1.3
    scalar = substantial_apply(table, grid, pU, H)
    vector = substantial_apply(table, grid, np.full(m, pU), H)
    assert np.allclose(scalar, vector, rtol=1e-13)


def test_substantial_apply_zero_history_step():
    grid = TimeGrid.uniform(0.5, 4)
    table = fbdf_Q(0.5, grid.tau, 4)
    out = substantial_apply(table, grid, 0.0, np.array([3.0]))
    assert out == 0.0


def test_substantial_apply_rejects_short_table():
    grid = TimeGrid.uniform(0.5, 10)
    table = fbdf_Q(0.5, grid.tau, 3)
    with pytest.raises(ValueError):
        substantial_apply(table, grid, 0.0, np.zeros((6, 2)))


@pytest.mark.parametrize("family,expected_rate", [("FBDF", 1.0), ("PI", None)])
def test_substantial_consistency_on_tempered_quadratic(family, expected_rate):
    # discrete operator applied to e^{-pU t} t^2 converges to
    # e^{-pU t} * 2 t^{2-mu} / Gamma(3-mu) with order 1 (FBDF) / 2-mu (PI)
    mu, pU, T = 0.6, 0.7, 1.0
    if expected_rate is None:
        expected_rate = 2.0 - mu
    errs = []
    Ns = (64, 128, 256)
    for N in Ns:
        grid = TimeGrid.uniform(T, N)
        t = grid.nodes
        table = (fbdf_Q(mu, grid.tau, N) if family == "FBDF"
                 else pi_Q(mu, grid, N))
        V = np.exp(-pU * t) * t ** 2
        got = substantial_apply(table, grid, pU, V)
        exact = np.exp(-pU * T) * 2.0 * T ** (2.0 - mu) / gamma_fn(3.0 - mu)
        errs.append(abs(got - exact))
    rates = observed_rates(errs, np.asarray(Ns, dtype=float))
    assert abs(rates[-1] - expected_rate) < 0.15
