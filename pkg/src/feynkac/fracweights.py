"""Time-discretization weight sequences and discrete substantial operators.

Two weight families approximate the fractional (substantial) derivative of
order ``mu`` in ``(0, 1)`` on a time grid:

* ``FBDF`` -- convolution weights generated by ``((1 - z) / tau)^mu``,
  first-order accurate, uniform grids only;
* ``PI`` -- product-integration weights from piecewise-linear interpolation
  inside the fractional integral, order ``2 - mu``, any monotone grid.

Both produce positive, strictly decreasing sequences ``Q_0 > Q_1 > ...``
together with the comparison sequence ``L_n = t_n^{-mu} / Gamma(1 - mu)``
satisfying the chain ``L_{n+1} < Q_n <= L_n`` on uniform grids.  The
discrete substantial operator combines a coefficient history with these
weights and exponential tempering factors ``exp(pU (t_{n-l} - t_n))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import rgamma

from .kernels import hist_dot

__all__ = [
    "TimeGrid",
    "WeightTable",
    "grunwald_weights",
    "fbdf_Q",
    "pi_Q",
    "substantial_apply",
]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time nodes ``t_0 = 0 < ... < t_N = T``."""

    nodes: np.ndarray
    kind: str = "uniform"
    grade: float = 1.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("need at least two time nodes")
        if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must start at 0 and strictly increase")
        object.__setattr__(self, "nodes", nodes)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def tau(self) -> float:
        """Constant step size; only meaningful for uniform grids."""
        if self.kind != "uniform":
            raise ValueError("tau is defined for uniform grids only")
        return self.T / self.N

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @staticmethod
    def uniform(T: float, N: int) -> "TimeGrid":
        return TimeGrid(np.linspace(0.0, T, N + 1), "uniform")

    @staticmethod
    def graded(T: float, N: int, grade: float) -> "TimeGrid":
        """Nodes ``t_j = (j/N)^grade * T`` concentrating steps near ``t=0``."""
        j = np.arange(N + 1) / N
        return TimeGrid(T * j ** grade, "graded", grade)


@dataclass(frozen=True)
class WeightTable:
    """Weight sequence of one time scheme at one derivative order.

    ``Q`` holds ``Q_0 .. Q_{n-1}``; ``L`` holds ``L_0 .. L_n`` with the
    convention ``L_0 := Q_0``; ``raw`` keeps the underlying one-step weights.
    """

    scheme: str
    order: float
    Q: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        object.__setattr__(self, "L", np.asarray(self.L, dtype=float))
        object.__setattr__(self, "raw", np.asarray(self.raw, dtype=float))
        if np.any(self.Q <= 0) or np.any(np.diff(self.Q) >= 0):
            raise ValueError("Q must be positive and strictly decreasing")

    @property
    def dQ(self) -> np.ndarray:
        """First differences ``Q_l - Q_{l-1}`` with ``Q_{-1} := 0``."""
        out = np.empty_like(self.Q)
        out[0] = self.Q[0]
        out[1:] = np.diff(self.Q)
        return out


def grunwald_weights(gamma: float, tau: float, n: int) -> np.ndarray:
    """First ``n + 1`` convolution weights of ``((1 - z)/tau)^gamma``.

    Computed by the stable recursion ``w_j = w_{j-1} (1 - (gamma+1)/j)``
    from ``w_0 = tau^{-gamma}``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    w = np.empty(n + 1)
    w[0] = tau ** (-gamma)
    for j in range(1, n + 1):
        w[j] = w[j - 1] * (1.0 - (gamma + 1.0) / j)
    return w


def _ell_sequence(order: float, nodes: np.ndarray, q0: float) -> np.ndarray:
    L = np.empty(nodes.size)
    L[0] = q0
    with np.errstate(divide="ignore"):
        L[1:] = nodes[1:] ** (-order) * rgamma(1.0 - order)
    return L


def fbdf_Q(gamma: float, tau: float, N: int) -> WeightTable:
    """Backward-difference weight table of order ``gamma`` on a uniform grid.

    ``Q_n = tau^{-gamma} * (-1)^n * C(gamma - 1, n)`` via the recursion
    ``Q_n = Q_{n-1} (n - gamma) / n``; ``L_n = t_n^{-gamma}/Gamma(1-gamma)``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("order must lie in (0, 1)")
    if N < 1:
        raise ValueError("N must be positive")
    Q = np.empty(N)
    Q[0] = tau ** (-gamma)
    for n in range(1, N):
        Q[n] = Q[n - 1] * (n - gamma) / n
    nodes = tau * np.arange(N + 1)
    return WeightTable("FBDF", gamma, Q, _ell_sequence(gamma, nodes, Q[0]),
                       grunwald_weights(gamma, tau, N))


def pi_Q(gamma: float, grid: TimeGrid, n: int) -> WeightTable:
    """Product-integration weights ``Q~_0 .. Q~_{n-1}`` for step ``n``.

    ``Q~_j = [(t_n - t_{n-1-j})^{1-gamma} - (t_n - t_{n-j})^{1-gamma}]
    / (Gamma(2-gamma) * (t_{n-j} - t_{n-1-j}))``.  On uniform grids the
    sequence is independent of ``n``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("order must lie in (0, 1)")
    if not 1 <= n <= grid.N:
        raise ValueError(f"step index {n} outside 1..{grid.N}")
    t = grid.nodes
    tn = t[n]
    back = tn - t[n - 1::-1]            # t_n - t_{n-1-j}, j = 0..n-1
    front = tn - t[n:0:-1]              # t_n - t_{n-j},   j = 0..n-1
    steps = back - front
    g = 1.0 - gamma
    Q = rgamma(2.0 - gamma) * (back ** g - front ** g) / steps
    return WeightTable("PI", gamma, Q, _ell_sequence(gamma, t[: n + 1], Q[0]), Q)


def substantial_apply(table: WeightTable, grid: TimeGrid, pU, history,
                      l_correction: bool = False):
    """Apply the discrete substantial operator to a coefficient history.

    Parameters
    ----------
    table : WeightTable
        Weights of the operator's order; for step ``n`` at least ``Q_0..Q_{n-1}``
        and ``L_n`` must be present.
    grid : TimeGrid
        Supplies the tempering time offsets ``t_{n-l} - t_n``.
    pU : complex scalar or (m,) array
        Constant tempering rate, or one rate per component of the history
        vectors (point-weight path).
    history : (n+1, m) array or (n+1,) sequence
        ``V_0 .. V_n``.
    l_correction : bool
        When true, the initial-value coefficient is ``Q_{n-1} - L_n`` instead
        of ``Q_{n-1}`` (the variant used when the operator order is ``1 - gamma``
        and the scheme differentiates once more in time).

    Returns
    -------
    array of shape ``(m,)`` (or scalar-shaped like one history row)
        ``sum_{l=0}^{n-1} e^{pU (t_{n-l} - t_n)} (Q_l - Q_{l-1}) V_{n-l}
        - e^{pU (t_0 - t_n)} (Q_{n-1} [- L_n]) V_0``.
    """
    H = np.asarray(history)
    squeeze = H.ndim == 1
    if squeeze:
        H = H[:, None]
    n = H.shape[0] - 1
    if n == 0:
        out = np.zeros(H.shape[1], dtype=H.dtype)
        return out[0] if squeeze else out
    if table.Q.size < n or table.L.size < n + 1:
        raise ValueError("weight table too short for this history")
    t = grid.nodes
    offsets = t[n - np.arange(n + 1)] - t[n]          # t_{n-l} - t_n, l = 0..n
    dQ = table.dQ[:n]
    g0 = table.Q[n - 1] - (table.L[n] if l_correction else 0.0)
    pU = np.asarray(pU)
    if pU.ndim == 0:
        zf = np.exp(pU * offsets)
        coef = zf[:n] * dQ
        out = hist_dot(coef, H[n::-1][:n]) - zf[n] * g0 * H[0]
    else:
        zf = np.exp(np.outer(offsets, pU))            # (n+1, m)
        out = np.einsum("l,lm,lm->m", dQ, zf[:n], H[n:0:-1], optimize=True)
        out -= zf[n] * g0 * H[0]
    return out[0] if squeeze else out
