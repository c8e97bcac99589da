"""Gaussian quadrature rules and weakly singular inner products.

Provides Gauss-Legendre and Gauss-Jacobi rules on ``(-1, 1)``, composite
per-cell rules on ``[0, 1]``, geometrically edge-graded rules for integrands
with algebraic endpoint singularities, and the tensorized Jacobi-weighted
double integral used for inner products of fractional integrals against
smooth test functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import rgamma, roots_jacobi

__all__ = [
    "QuadRule",
    "gauss_legendre",
    "gauss_jacobi",
    "map_interval",
    "cell_rule",
    "edge_graded_rule",
    "singular_inner_left",
    "singular_inner_right",
]


@dataclass(frozen=True)
class QuadRule:
    """A quadrature rule on ``(-1, 1)``.

    ``weights`` include the family's weight function, i.e. sums of
    ``w * f(nodes)`` approximate ``∫ ω(x) f(x) dx``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    family: str = "legendre"

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))


def gauss_legendre(n: int) -> QuadRule:
    """Gauss-Legendre rule with ``n`` nodes on ``(-1, 1)``.

    Exact for polynomials of degree ``2n - 1``.
    """
    if n < 1:
        raise ValueError("need at least one node")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadRule(x, w, "legendre")


def gauss_jacobi(n: int, a: float, b: float) -> QuadRule:
    """Gauss-Jacobi rule for the weight ``(1-x)^a (1+x)^b`` on ``(-1, 1)``.

    Exact for ``p(x) (1-x)^a (1+x)^b`` with ``deg p <= 2n - 1``.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if a <= -1 or b <= -1:
        raise ValueError("Jacobi exponents must exceed -1")
    if a == 0.0 and b == 0.0:
        return gauss_legendre(n)
    x, w = roots_jacobi(n, a, b)
    return QuadRule(x, w, f"jacobi({a},{b})")


def map_interval(rule: QuadRule, lo: float, hi: float):
    """Affinely map a weightless (Legendre) rule from ``(-1,1)`` to ``(lo, hi)``."""
    half = 0.5 * (hi - lo)
    return lo + half * (rule.nodes + 1.0), half * rule.weights


def cell_rule(edges, npts: int = 16):
    """Composite Gauss-Legendre rule over the cells delimited by ``edges``.

    Returns flat arrays ``(x, w)`` covering ``[edges[0], edges[-1]]``.
    """
    edges = np.asarray(edges, dtype=float)
    base = gauss_legendre(npts)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * base.nodes[None, :]).ravel()
    w = (half[:, None] * base.weights[None, :]).ravel()
    return x, w


def edge_graded_rule(lo: float = 0.0, hi: float = 1.0, npts: int = 6,
                     levels: int = 12, ratio: float = 0.5):
    """Composite rule geometrically refined toward both endpoints.

    Handles integrands with integrable algebraic singularities (or unbounded
    derivatives) at ``lo`` and ``hi``: the interval is split at its midpoint
    and each half subdivided geometrically with the given ``ratio`` for
    ``levels`` levels, applying an ``npts``-point Gauss-Legendre rule per
    subinterval.
    """
    fr = ratio ** np.arange(levels)
    left = np.concatenate(([0.0], fr[::-1] * 0.5))
    breaks = np.concatenate((left, (1.0 - left)[::-1][1:]))
    edges = lo + (hi - lo) * breaks
    return cell_rule(edges, npts)


def _double_jacobi(h1, h2, alpha: float, b: float, n: int):
    """Tensor Gauss-Jacobi evaluation of the weakly singular double integral

    ``∫_0^b h2(x) * (I^{2-alpha} h1)(x) dx`` where ``I^{2-alpha}`` is the
    left fractional integral of order ``2 - alpha``.
    """
    outer = gauss_jacobi(n, 0.0, 2.0 - alpha)      # weight (1+u)^{2-alpha}
    inner = gauss_jacobi(n, 1.0 - alpha, 0.0)      # weight (1-v)^{1-alpha}
    x = b * 0.5 * (outer.nodes + 1.0)              # outer points in (0, b)
    s = x[:, None] * 0.5 * (inner.nodes[None, :] + 1.0)
    vals = h1(s) * inner.weights[None, :]
    pref = 2.0 ** (2.0 * alpha - 5.0) * b ** (3.0 - alpha) * rgamma(2.0 - alpha)
    return pref * np.sum(outer.weights * h2(x) * vals.sum(axis=1))


def singular_inner_left(h1, h2, alpha: float, b: float = 1.0, n: int = 24) -> float:
    """Inner product of the left fractional integral of ``h1`` with ``h2``.

    Evaluates ``∫_0^b (I_left^{2-alpha} h1)(x) h2(x) dx`` by a tensor
    Gauss-Jacobi rule that absorbs the kernel singularity into the weights.
    At ``alpha == 2`` the fractional integral is the identity and the plain
    product integral is returned.
    """
    if alpha == 2.0:
        x, w = cell_rule(np.linspace(0.0, b, 9), max(n, 16))
        return float(np.sum(w * h1(x) * h2(x)))
    return float(_double_jacobi(h1, h2, alpha, b, n))


def singular_inner_right(h1, h2, alpha: float, b: float = 1.0, n: int = 24) -> float:
    """Mirror of :func:`singular_inner_left` with the right-sided integral.

    Uses the reflection identity: the right-sided form on ``(0, b)`` equals
    the left-sided form applied to the reflected integrands.
    """
    return singular_inner_left(lambda s: h1(b - s), lambda x: h2(b - x), alpha, b, n)
