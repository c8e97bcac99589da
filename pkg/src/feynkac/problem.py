"""Manufactured problems: exact solutions, forcings, and load recipes.

Each registered case fixes an exact solution of the tempered-fractional
model and exposes, for every discrete form it supports, both a pointwise
forcing (for verification) and a *loader*: a per-time callable producing the
Galerkin load vector from precomputed exact power-moment loads, so the time
loop never re-integrates singular terms.

Forms
-----
``backward``    G_t = sD_t^{1-gamma} K D^alpha G - p U G + f
``equivalent``  sD^gamma_* G = K D^alpha G + f
``forward``     G_t = K D^alpha sD_t^{1-gamma} G - p U G + f
``point``       backward form sampled pointwise (collocation)

``D^alpha`` is the Riesz derivative normalized by ``2 cos(pi alpha / 2)``;
the 2D case uses the plain left-sided derivative in each coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import rgamma

from .fracassembly import load_vector, power_load
from .quadrature import cell_rule

_GAMMA = math.gamma

__all__ = [
    "PotentialFn",
    "ProblemSpec",
    "ManufacturedCase",
    "registry_get",
    "make_problem",
    "available_cases",
    "kfac",
    "riesz_sin_series",
]


def kfac(K: float, alpha: float) -> float:
    """Scale turning one-sided derivative sums into ``K`` times the
    normalized Riesz derivative: ``-K / (2 cos(pi alpha / 2))``."""
    return -K / (2.0 * math.cos(math.pi * alpha / 2.0))


@dataclass(frozen=True)
class PotentialFn:
    """Potential ``U``: constant ``value`` or the linear ramp ``value * x``."""

    kind: str = "constant"
    value: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "linear":
            return self.value * x
        raise ValueError(f"unknown potential kind {self.kind!r}")

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(x)
        return np.full_like(x, self.value)

    @property
    def constant(self):
        """The constant value, or ``None`` for genuinely varying potentials."""
        return self.value if self.kind == "constant" else None


@dataclass(frozen=True)
class ProblemSpec:
    """A fully bound model problem (case + parameters + callables)."""

    case: str
    dim: int
    alpha: float
    gamma: float
    sigma: float
    T: float
    K: float
    p: complex
    potential: PotentialFn
    exact: Callable
    initial: Callable
    forcing: dict = field(default_factory=dict)
    make_loader: Callable | None = None
    make_loader_2d: Callable | None = None

    @property
    def kfac(self) -> float:
        return kfac(self.K, self.alpha)

    @property
    def is_complex(self) -> bool:
        return abs(complex(self.p).imag) > 0.0


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    dim: int
    default_T: float
    default_sigma: float | None
    potential_kind: str        # "one" -> U = 1,  "x" -> U = x
    K_rule: str                # "riesz" -> K = -2 cos(pi alpha/2),  "one"
    builder: Callable
    forms: tuple

    def make(self, alpha: float, gamma: float, p: complex = 0.0,
             sigma: float | None = None, K: float | None = None,
             T: float | None = None) -> ProblemSpec:
        alpha = float(alpha)
        gamma = float(gamma)
        if not (1.0 < alpha <= 2.0):
            raise ValueError(
                f"alpha must satisfy 1 < alpha <= 2; got alpha = {alpha}")
        if not (0.0 < gamma < 1.0):
            raise ValueError(
                f"gamma must satisfy 0 < gamma < 1; got gamma = {gamma}")
        p = complex(p)
        if p.imag == 0.0:
            p = p.real
        if sigma is None:
            sigma = self.default_sigma if self.default_sigma is not None else 2.0
        if K is None:
            K = -2.0 * math.cos(math.pi * alpha / 2.0) if self.K_rule == "riesz" else 1.0
        if T is None:
            T = self.default_T
        if T <= 0:
            raise ValueError("T must be positive")
        pot = (PotentialFn("constant", 1.0) if self.potential_kind == "one"
               else PotentialFn("linear", 1.0))
        for u_end in (0.0, pot.value):
            if (p * u_end).real < -1e-12:
                raise ValueError(
                    "Re(p U) must be nonnegative on [0, 1]; "
                    f"got Re(p*{u_end}) = {(p * u_end).real}")
        return self.builder(self, alpha, gamma, float(sigma), float(T),
                            float(K), p, pot)


# ---------------------------------------------------------------------------
# series helpers
# ---------------------------------------------------------------------------

def riesz_sin_series(alpha: float, x, nmax: int = 40, tol: float = 1e-16):
    """Both-sided fractional derivative of ``sin(pi x)``:
    ``P(x) = sum_k (-1)^k pi^(2k+1) [x^(2k+1-a) + (1-x)^(2k+1-a)] / G(2k+2-a)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k in range(nmax):
        c = (-1.0) ** k * math.pi ** (2 * k + 1) * rgamma(2 * k + 2 - alpha)
        if abs(c) < tol and k > 2:
            break
        e = 2 * k + 1 - alpha
        out = out + c * (x ** e + (1.0 - x) ** e)
    return out


def _sin_riesz_terms(alpha: float, nmax: int = 40, tol: float = 1e-18):
    terms = []
    for k in range(nmax):
        c = (-1.0) ** k * math.pi ** (2 * k + 1) * rgamma(2 * k + 2 - alpha)
        if abs(c) < tol and k > 2:
            break
        e = 2 * k + 1 - alpha
        terms.append((c, e, "left"))
        terms.append((c, e, "right"))
    return terms


def _exp_series_len(absarg: float, tol: float = 1e-18) -> int:
    m, term = 0, 1.0
    while term > tol and m < 150:
        m += 1
        term *= absarg / max(m, 1)
    return max(m + 4, 10)


def _reflect_poly(pows: dict) -> dict:
    """Coefficients of ``w(1 - u)`` given ``w(x) = sum_j c_j x^j``."""
    out = {}
    for j, c in pows.items():
        for i in range(j + 1):
            out[i] = out.get(i, 0.0) + c * math.comb(j, i) * (-1.0) ** i
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


class _TemperedPolyCombos:
    """Series expansions of ``v(x, t) = e^{-p x t} w(x)`` for a polynomial
    ``w`` vanishing at both endpoints: integer-power coefficients of the
    function itself and fractional-power coefficients of its two one-sided
    derivatives of order ``alpha`` (left in ``x``, right via ``u = 1 - x``)."""

    def __init__(self, w_pows: dict, alpha: float, p: complex, Tmax: float):
        self.alpha = alpha
        self.p = p
        self.w = dict(w_pows)
        self.wref = _reflect_poly(self.w)
        if abs(self.wref.get(0, 0.0)) > 1e-14 or abs(self.w.get(0, 0.0)) > 1e-14:
            raise ValueError("w must vanish at both endpoints")
        M = _exp_series_len(abs(p) * Tmax)
        self.M = M
        self.kmax = M + max(self.w)
        ks = np.arange(1, self.kmax + 1)
        self.ks = ks
        self.ffac = np.array([_GAMMA(k + 1.0) * rgamma(k + 1.0 - alpha) for k in ks])

    def coefficient_arrays(self, t: float):
        """(c_int, c_ref) with ``v = sum_k c_int[k] x^k`` and
        ``v(1-u) = sum_k c_ref[k] u^k`` (index k = 1..kmax)."""
        m = np.arange(self.M + 1)
        a = np.zeros(self.M + 1, dtype=complex)
        b = np.zeros(self.M + 1, dtype=complex)
        a[0] = b[0] = 1.0
        if self.p != 0 and t != 0.0:
            a[1:] = np.cumprod(np.full(self.M, -self.p * t) / m[1:])
            b[1:] = np.cumprod(np.full(self.M, self.p * t) / m[1:])
        cint = np.zeros(self.kmax + 1, dtype=complex)
        cref = np.zeros(self.kmax + 1, dtype=complex)
        for j, cj in self.w.items():
            cint[j:j + self.M + 1] += cj * a
        eb = np.exp(-self.p * t)
        for j, cj in self.wref.items():
            cref[j:j + self.M + 1] += (cj * eb) * b
        return cint[1:], cref[1:]

    def value(self, x, t: float):
        cint, _ = self.coefficient_arrays(t)
        x = np.asarray(x, dtype=float)
        return np.polyval(np.concatenate((cint[::-1], [0.0])), x)

    def frac_two_sided(self, x, t: float):
        """Pointwise ``(leftD^alpha + rightD^alpha) v(., t)`` on ``(0, 1)``."""
        cint, cref = self.coefficient_arrays(t)
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for k, fk, cl, cr in zip(self.ks, self.ffac, cint, cref):
            e = k - self.alpha
            if cl != 0.0:
                out += (fk * cl) * x ** e
            if cr != 0.0:
                out += (fk * cr) * (1.0 - x) ** e
        return out

    def load_tables(self, d: int, J: int):
        Lint = np.stack([power_load(d, J, float(k), "left") for k in self.ks])
        # rows whose derivative factor vanishes (integer-order poles of
        # 1/Gamma) never contribute; skip them so the exponent stays > -1
        dim = Lint.shape[1]
        zero = np.zeros(dim)

        def frac_row(k, side):
            if self.ffac[k - 1] == 0.0:
                return zero
            return power_load(d, J, float(k - self.alpha), side)

        Ll = np.stack([frac_row(k, "left") for k in self.ks])
        Lr = np.stack([frac_row(k, "right") for k in self.ks])
        return Lint, Ll, Lr


# ---------------------------------------------------------------------------
# case ex41: constant potential, sin profile
# ---------------------------------------------------------------------------

def _build_ex41(case, alpha, gamma, sigma, T, K, p, pot):
    kf = kfac(K, alpha)
    pr = p.real if p.imag == 0 else p

    def exact(x, t):
        return np.exp(-pr * t) * (t ** sigma + 1.0) * np.sin(np.pi * np.asarray(x))

    def initial(x):
        return np.sin(np.pi * np.asarray(x))

    def c_rl(t):
        # Riemann-Liouville derivative of order 1-gamma of t^sigma + 1
        return (_GAMMA(sigma + 1.0) * rgamma(sigma + gamma) * t ** (sigma + gamma - 1.0)
                + rgamma(gamma) * t ** (gamma - 1.0))

    def c_cap(t):
        # Caputo derivative of order gamma of t^sigma + 1
        return _GAMMA(sigma + 1.0) * rgamma(sigma + 1.0 - gamma) * t ** (sigma - gamma)

    def f_backward(x, t):
        x = np.asarray(x)
        return (sigma * t ** (sigma - 1.0) * np.exp(-pr * t) * np.sin(np.pi * x)
                - np.exp(-pr * t) * c_rl(t) * kf * riesz_sin_series(alpha, x))

    def f_equivalent(x, t):
        x = np.asarray(x)
        return np.exp(-pr * t) * (c_cap(t) * np.sin(np.pi * x)
                                  - (t ** sigma + 1.0) * kf * riesz_sin_series(alpha, x))

    def make_loader(space, form):
        sinL = load_vector(space, lambda x: np.sin(np.pi * x), npts=16)
        PL = load_vector(space, None, singular=_sin_riesz_terms(alpha))
        if form == "backward":
            return lambda t: (sigma * t ** (sigma - 1.0) * np.exp(-pr * t)) * sinL \
                - (np.exp(-pr * t) * c_rl(t) * kf) * PL
        if form == "equivalent":
            return lambda t: np.exp(-pr * t) * (c_cap(t) * sinL
                                                - ((t ** sigma + 1.0) * kf) * PL)
        raise ValueError(f"ex41 has no form {form!r}")

    return ProblemSpec(case.name, 1, alpha, gamma, sigma, T, K, p, pot,
                       exact, initial,
                       {"backward": f_backward, "equivalent": f_equivalent},
                       make_loader, None)


# ---------------------------------------------------------------------------
# case ex42: 2D, left-sided derivatives, zero initial data
# ---------------------------------------------------------------------------

def _d_left_poly(pows: dict, alpha: float):
    """(coef, expo) pairs of the left derivative of order alpha of a poly."""
    return [(c * _GAMMA(j + 1.0) * rgamma(j + 1.0 - alpha), j - alpha)
            for j, c in pows.items()]


def _build_ex42(case, alpha, gamma, sigma, T, K, p, pot):
    pw = p.real
    Xp = {1: 1.0, 2: -2.0, 3: 1.0}      # x (1-x)^2
    Yp = {2: 1.0, 3: -1.0}              # y^2 (1-y)
    DX = _d_left_poly(Xp, alpha)
    DY = _d_left_poly(Yp, alpha)
    cgam = _GAMMA(3.0 + gamma) / 2.0

    def _poly(pows, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for j, c in pows.items():
            out += c * x ** j
        return out

    def _fracpoly(pairs, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, e in pairs:
            out += c * x ** e
        return out

    def exact(x, y, t):
        return np.exp(-pw * t) * t ** (2.0 + gamma) * _poly(Xp, x) * _poly(Yp, y)

    def initial(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def f_point(x, y, t):
        X, Y = _poly(Xp, x), _poly(Yp, y)
        return np.exp(-pw * t) * (cgam * t ** 2 * X * Y
                                  - t ** (2.0 + gamma)
                                  * (_fracpoly(DX, x) * Y + X * _fracpoly(DY, y)))

    def make_loader_2d(space):
        d, J = space.d, space.J
        lX = sum(c * power_load(d, J, float(j), "left") for j, c in Xp.items())
        lY = sum(c * power_load(d, J, float(j), "left") for j, c in Yp.items())
        lDX = sum(c * power_load(d, J, e, "left") for c, e in DX)
        lDY = sum(c * power_load(d, J, e, "left") for c, e in DY)
        A = np.outer(lX, lY)
        Bm = np.outer(lDX, lY) + np.outer(lX, lDY)

        def loader(t):
            return np.exp(-pw * t) * (cgam * t ** 2 * A - t ** (2.0 + gamma) * Bm)

        return loader

    return ProblemSpec(case.name, 2, alpha, gamma, sigma, T, K, p, pot,
                       exact, initial, {"equivalent": f_point},
                       None, make_loader_2d)


# ---------------------------------------------------------------------------
# cases ex43 / ex44: linear potential U = x, cubic profile
# ---------------------------------------------------------------------------

def _build_ex43(case, alpha, gamma, sigma, T, K, p, pot):
    kf = kfac(K, alpha)
    combos = _TemperedPolyCombos({1: -1.0, 3: 1.0}, alpha, p, T)

    def wfun(x):
        x = np.asarray(x, dtype=float)
        return x ** 3 - x

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return (t ** sigma + 5.0) * np.exp(-p * x * t) * wfun(x)

    def initial(x):
        return 5.0 * wfun(x)

    def A_cap(t):
        return _GAMMA(sigma + 1.0) * rgamma(sigma + 1.0 - gamma) * t ** (sigma - gamma)

    def f_equivalent(x, t):
        x = np.asarray(x, dtype=float)
        return (A_cap(t) * np.exp(-p * x * t) * wfun(x)
                - (t ** sigma + 5.0) * kf * combos.frac_two_sided(x, t))

    def make_loader(space, form):
        if form != "equivalent":
            raise ValueError(f"ex43 has no form {form!r}")
        Lint, Ll, Lr = combos.load_tables(space.d, space.J)
        ff = combos.ffac

        def loader(t):
            cint, cref = combos.coefficient_arrays(t)
            smooth = cint @ Lint
            frac = (ff * cint) @ Ll + (ff * cref) @ Lr
            return A_cap(t) * smooth - ((t ** sigma + 5.0) * kf) * frac

        return loader

    return ProblemSpec(case.name, 1, alpha, gamma, sigma, T, K, p, pot,
                       exact, initial, {"equivalent": f_equivalent},
                       make_loader, None)


def _build_ex44(case, alpha, gamma, sigma, T, K, p, pot):
    kf = kfac(K, alpha)
    combos = _TemperedPolyCombos({1: -1.0, 3: 1.0}, alpha, p, T)

    def wfun(x):
        x = np.asarray(x, dtype=float)
        return x ** 3 - x

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return (t ** sigma + 5.0) * np.exp(-p * x * t) * wfun(x)

    def initial(x):
        return 5.0 * wfun(x)

    def C_rl(t):
        return (_GAMMA(sigma + 1.0) * rgamma(sigma + gamma) * t ** (sigma + gamma - 1.0)
                + 5.0 * rgamma(gamma) * t ** (gamma - 1.0))

    def f_forward(x, t):
        x = np.asarray(x, dtype=float)
        return (sigma * t ** (sigma - 1.0) * np.exp(-p * x * t) * wfun(x)
                - C_rl(t) * kf * combos.frac_two_sided(x, t))

    def make_loader(space, form):
        if form != "forward":
            raise ValueError(f"ex44 has no form {form!r}")
        Lint, Ll, Lr = combos.load_tables(space.d, space.J)
        ff = combos.ffac

        def loader(t):
            cint, cref = combos.coefficient_arrays(t)
            smooth = cint @ Lint
            frac = (ff * cint) @ Ll + (ff * cref) @ Lr
            return (sigma * t ** (sigma - 1.0)) * smooth - (C_rl(t) * kf) * frac

        return loader

    return ProblemSpec(case.name, 1, alpha, gamma, sigma, T, K, p, pot,
                       exact, initial, {"forward": f_forward},
                       make_loader, None)


# ---------------------------------------------------------------------------
# case ex43_colloc: pointwise forcing, quartic profile
# ---------------------------------------------------------------------------

def _build_ex43_colloc(case, alpha, gamma, sigma, T, K, p, pot):
    kf = kfac(K, alpha)

    def wfun(x):
        x = np.asarray(x, dtype=float)
        return x ** 3 - x ** 4

    def exact(x, t):
        return (t ** sigma + 5.0) * wfun(x)

    def initial(x):
        return 5.0 * wfun(x)

    Dw_left = _d_left_poly({3: 1.0, 4: -1.0}, alpha)
    Dw_right = _d_left_poly(_reflect_poly({3: 1.0, 4: -1.0}), alpha)

    def Sw(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, e in Dw_left:
            out += c * x ** e
        u = 1.0 - x
        for c, e in Dw_right:
            out += c * u ** e
        return out

    nser = _exp_series_len(abs(p) * T) + 5
    ms = np.arange(nser)
    c1 = np.array([_GAMMA(m + sigma + 1.0) * rgamma(m + sigma + gamma) for m in ms])
    c2 = np.array([5.0 * _GAMMA(m + 1.0) * rgamma(m + gamma) for m in ms])

    def tempered_rl(a, t):
        """sD_t^{1-gamma} of (t^sigma + 5) with tempering rate ``a``:
        e^{-a t} RL^{1-gamma}[e^{a t}(t^sigma + 5)] as a power series."""
        a = np.asarray(a, dtype=complex)
        am = a[..., None] ** ms / np.array([math.factorial(m) for m in ms])
        tt = c1 * t ** (ms + sigma + gamma - 1.0) + c2 * t ** (ms + gamma - 1.0)
        return np.exp(-a * t) * (am @ tt)

    def f_point(x, t):
        x = np.asarray(x, dtype=float)
        val = (sigma * t ** (sigma - 1.0) * wfun(x)
               + p * x * (t ** sigma + 5.0) * wfun(x)
               - kf * Sw(x) * tempered_rl(p * x, t))
        return val if complex(p).imag != 0.0 else val.real

    return ProblemSpec(case.name, 1, alpha, gamma, sigma, T, K, p, pot,
                       exact, initial, {"point": f_point}, None, None)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_REGISTRY = {
    "ex41": ManufacturedCase("ex41", 1, 0.5, 2.0, "one", "riesz",
                             _build_ex41, ("backward", "equivalent")),
    "ex42": ManufacturedCase("ex42", 2, 1.0, 2.0, "one", "one",
                             _build_ex42, ("equivalent",)),
    "ex43": ManufacturedCase("ex43", 1, 0.5, 2.0, "x", "riesz",
                             _build_ex43, ("equivalent",)),
    "ex43_colloc": ManufacturedCase("ex43_colloc", 1, 0.5, 2.0, "x", "riesz",
                                    _build_ex43_colloc, ("point",)),
    "ex44": ManufacturedCase("ex44", 1, 1.0, 2.0, "x", "riesz",
                             _build_ex44, ("forward",)),
}


def available_cases():
    return sorted(_REGISTRY)


def registry_get(name: str) -> ManufacturedCase:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown case {name!r}; available: {available_cases()}")


def make_problem(name: str, alpha: float, gamma: float, p: complex = 0.0,
                 sigma: float | None = None, K: float | None = None,
                 T: float | None = None) -> ProblemSpec:
    return registry_get(name).make(alpha, gamma, p=p, sigma=sigma, K=K, T=T)
