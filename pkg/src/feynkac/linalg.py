"""Structured matrix-vector products, Krylov solvers, wavelet preconditioner.

Toeplitz products use circulant embedding (next power of two >= 2n-1) and
the FFT; Kronecker products are applied through reshapes and one-sided GEMMs
and are never formed densely; GMRES (restarted) and Bi-CGSTAB are
field-generic (real or complex) with the relative-residual stopping rule
``||r_k|| / ||r_0|| <= tol``; the diagonal wavelet preconditioner rescales
the multiscale representation of the operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .bspline import fwt_forward, fwt_inverse, fwt_synthesis_T

__all__ = [
    "SolverError",
    "toeplitz_matvec",
    "ToeplitzOp",
    "kron2_apply",
    "KrylovResult",
    "gmres_restarted",
    "bicgstab",
    "PrecondSpec",
    "wavelet_precond_build",
]


class SolverError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance."""

    def __init__(self, message, best=None, iters=0):
        super().__init__(message)
        self.best = best
        self.iters = iters


# ---------------------------------------------------------------------------
# structured products
# ---------------------------------------------------------------------------

def _embed_symbol(first_col, first_row):
    first_col = np.asarray(first_col)
    first_row = np.asarray(first_row)
    n = first_col.size
    if first_row.size != n or first_col[0] != first_row[0]:
        raise ValueError("inconsistent Toeplitz first column/row")
    m = 1
    while m < 2 * n - 1:
        m *= 2
    emb = np.zeros(m, dtype=np.result_type(first_col.dtype, first_row.dtype, float))
    emb[:n] = first_col
    emb[m - n + 1:] = first_row[1:][::-1]
    return emb, n, m


def toeplitz_matvec(first_col, first_row, x):
    """Multiply the Toeplitz matrix defined by its first column/row by ``x``.

    Works for one vector or a stacked ``(n, k)`` matrix of columns.
    """
    emb, n, m = _embed_symbol(first_col, first_row)
    return _toeplitz_apply(np.fft.fft(emb), n, m, x,
                           np.iscomplexobj(emb))


def _toeplitz_apply(symbol_fft, n, m, x, symbol_complex):
    x = np.asarray(x)
    one = x.ndim == 1
    X = x[:, None] if one else x
    pad = np.zeros((m, X.shape[1]), dtype=np.result_type(X.dtype, float))
    pad[:n] = X
    Y = np.fft.ifft(symbol_fft[:, None] * np.fft.fft(pad, axis=0), axis=0)[:n]
    if not (symbol_complex or np.iscomplexobj(x)):
        Y = Y.real
    return Y[:, 0] if one else np.ascontiguousarray(Y)


@dataclass
class ToeplitzOp:
    """Toeplitz operator with a cached FFT of its circulant embedding."""

    first_col: np.ndarray
    first_row: np.ndarray
    _fft: np.ndarray = field(init=False, repr=False)
    _m: int = field(init=False, repr=False)

    def __post_init__(self):
        emb, n, m = _embed_symbol(self.first_col, self.first_row)
        self._fft = np.fft.fft(emb)
        self._m = m
        self._complex = np.iscomplexobj(emb)

    @property
    def n(self) -> int:
        return self.first_col.size

    def matvec(self, x):
        return _toeplitz_apply(self._fft, self.n, self._m, x, self._complex)

    def dense(self) -> np.ndarray:
        n = self.n
        idx = np.subtract.outer(np.arange(n), np.arange(n))
        full = np.concatenate((self.first_row[:0:-1], self.first_col))
        return full[idx + n - 1]

    @property
    def T(self) -> "ToeplitzOp":
        return ToeplitzOp(self.first_row.copy(), self.first_col.copy())


def kron2_apply(A, M, P):
    """Apply the Kronecker product ``M (x) A`` to a flattened square array.

    Uses the identity ``(M (x) A) vec(X) = vec(A X M^T)`` with column-major
    ``vec``; ``A`` and ``M`` may be dense arrays or callables applying
    themselves to ``(n, k)`` matrices.
    """
    P = np.asarray(P)
    n2 = P.shape[0]
    n = int(round(np.sqrt(n2)))
    if n * n != n2:
        raise ValueError("vector length is not a perfect square")
    X = P.reshape(n, n, order="F")
    W = A @ X if isinstance(A, np.ndarray) else A(X)
    Z = (M @ W.T).T if isinstance(M, np.ndarray) else M(W.T).T
    return Z.ravel(order="F")


# ---------------------------------------------------------------------------
# Krylov solvers
# ---------------------------------------------------------------------------

class KrylovResult(NamedTuple):
    x: np.ndarray
    iters: float
    converged: bool


def _as_apply(op) -> Callable:
    if isinstance(op, np.ndarray):
        return lambda v: op @ v
    if hasattr(op, "matvec"):
        return op.matvec
    return op


def gmres_restarted(op, b, x0=None, restart: int = 30, tol: float = 1e-8,
                    maxiter: int = 100000, precond=None) -> KrylovResult:
    """Restarted GMRES with modified Gram-Schmidt and Givens rotations.

    Stops at the first iterate with ``||b - A x|| <= tol * ||b - A x0||``;
    ``iters`` counts inner iterations.  With a :class:`PrecondSpec` the
    split-preconditioned system is solved and the unknown mapped back.
    """
    if precond is not None:
        return _split_precond_solve(gmres_restarted, op, b, x0, precond,
                                    restart=restart, tol=tol, maxiter=maxiter)
    apply_op = _as_apply(op)
    b = np.asarray(b)
    cdtype = np.result_type(b.dtype, float)
    x = np.zeros_like(b, dtype=cdtype) if x0 is None else x0.astype(cdtype, copy=True)
    r = b - apply_op(x)
    norm0 = np.linalg.norm(r)
    if norm0 == 0.0:
        return KrylovResult(x, 0, True)
    target = tol * norm0
    iters = 0
    while iters < maxiter:
        beta = np.linalg.norm(r)
        if beta <= target:
            return KrylovResult(x, iters, True)
        V = np.zeros((restart + 1, b.size), dtype=np.result_type(cdtype, r.dtype))
        H = np.zeros((restart + 1, restart), dtype=V.dtype)
        cs = np.zeros(restart, dtype=V.dtype)
        sn = np.zeros(restart, dtype=V.dtype)
        g = np.zeros(restart + 1, dtype=V.dtype)
        V[0] = r / beta
        g[0] = beta
        k = 0
        for k in range(restart):
            w = apply_op(V[k])
            for i in range(k + 1):
                H[i, k] = np.vdot(V[i], w)
                w = w - H[i, k] * V[i]
            H[k + 1, k] = np.linalg.norm(w)
            if H[k + 1, k] > 0:
                V[k + 1] = w / H[k + 1, k]
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -np.conj(sn[i]) * H[i, k] + np.conj(cs[i]) * H[i + 1, k]
                H[i, k] = t
            denom = np.sqrt(np.abs(H[k, k]) ** 2 + np.abs(H[k + 1, k]) ** 2)
            if denom == 0.0:
                cs[k], sn[k] = 1.0, 0.0
            else:
                cs[k] = np.conj(H[k, k]) / denom
                sn[k] = np.conj(H[k + 1, k]) / denom
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            g[k + 1] = -np.conj(sn[k]) * g[k]
            g[k] = cs[k] * g[k]
            iters += 1
            if abs(g[k + 1]) <= target or iters >= maxiter:
                k += 1
                break
        else:
            k = restart
        y = np.linalg.solve(H[:k, :k], g[:k]) if k else np.zeros(0, dtype=V.dtype)
        x = x + V[:k].T @ y
        r = b - apply_op(x)
        if np.linalg.norm(r) <= target:
            return KrylovResult(x, iters, True)
    raise SolverError(f"GMRES: no convergence in {iters} inner iterations",
                      best=x, iters=iters)


def bicgstab(op, b, x0=None, tol: float = 1e-8, maxiter: int = 100000,
             precond=None) -> KrylovResult:
    """Bi-CGSTAB with the relative-residual stopping rule.

    ``iters`` counts full iterations; an early exit after the first half
    step contributes 0.5, matching the usual fractional averages.
    """
    if precond is not None:
        return _split_precond_solve(bicgstab, op, b, x0, precond,
                                    tol=tol, maxiter=maxiter)
    apply_op = _as_apply(op)
    b = np.asarray(b)
    cdtype = np.result_type(b.dtype, float)
    x = np.zeros_like(b, dtype=cdtype) if x0 is None else x0.astype(cdtype, copy=True)
    r = b - apply_op(x)
    norm0 = np.linalg.norm(r)
    if norm0 == 0.0:
        return KrylovResult(x, 0.0, True)
    target = tol * norm0
    if norm0 <= target:
        return KrylovResult(x, 0.0, True)
    r0hat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(r)
    p = np.zeros_like(r)
    iters = 0.0
    for _ in range(maxiter):
        rho_new = np.vdot(r0hat, r)
        if abs(rho_new) < 1e-290:
            r0hat = r.copy()
            rho_new = np.vdot(r0hat, r)
            if abs(rho_new) < 1e-290:
                raise SolverError("Bi-CGSTAB breakdown (rho = 0)", best=x, iters=iters)
        beta = (rho_new / rho) * (alpha / omega) if iters > 0 else 0.0
        rho = rho_new
        p = r + beta * (p - omega * v)
        v = apply_op(p)
        alpha = rho / np.vdot(r0hat, v)
        s = r - alpha * v
        if np.linalg.norm(s) <= target:
            x = x + alpha * p
            iters += 0.5
            return KrylovResult(x, iters, True)
        t = apply_op(s)
        omega = np.vdot(t, s) / np.vdot(t, t)
        x = x + alpha * p + omega * s
        r = s - omega * t
        iters += 1.0
        if np.linalg.norm(r) <= target:
            return KrylovResult(x, iters, True)
        if omega == 0.0:
            raise SolverError("Bi-CGSTAB breakdown (omega = 0)", best=x, iters=iters)
    raise SolverError(f"Bi-CGSTAB: no convergence in {iters} iterations",
                      best=x, iters=iters)


# ---------------------------------------------------------------------------
# wavelet diagonal preconditioner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrecondSpec:
    """Split preconditioner ``x = W D y`` for 1D or tensorized 2D systems.

    ``W`` is the multiscale synthesis operator, ``D`` the inverse square
    roots of the wavelet-basis diagonal of the operator.
    """

    D: np.ndarray
    J0: int
    J: int
    twod: bool = False

    def _tensor(self, v, f):
        n = 2 ** self.J - 1
        X = v.reshape(n, n, order="F")
        Y = f(X)
        Y = f(Y.T).T
        return Y.ravel(order="F")

    def apply_P(self, y):
        """Map transformed unknowns back: ``x = W (D * y)``."""
        z = self.D * y
        if self.twod:
            return self._tensor(z, lambda X: fwt_inverse(X, self.J0, self.J))
        return fwt_inverse(z, self.J0, self.J)

    def apply_PT(self, v):
        """Transpose map: ``D * (W^T v)``."""
        if self.twod:
            w = self._tensor(v, lambda X: fwt_synthesis_T(X, self.J0, self.J))
        else:
            w = fwt_synthesis_T(v, self.J0, self.J)
        return self.D * w

    def apply_Pinv(self, x):
        """Forward map of a single-scale iterate into transformed unknowns."""
        if self.twod:
            w = self._tensor(x, lambda X: fwt_forward(X, self.J0, self.J))
        else:
            w = fwt_forward(x, self.J0, self.J)
        return w / self.D


def _split_precond_solve(solver, op, b, x0, precond: PrecondSpec, **kw):
    apply_op = _as_apply(op)

    def op2(y):
        return precond.apply_PT(apply_op(precond.apply_P(y)))

    b2 = precond.apply_PT(b)
    y0 = None if x0 is None else precond.apply_Pinv(x0)
    res = solver(op2, b2, x0=y0, **kw)
    return KrylovResult(precond.apply_P(res.x), res.iters, res.converged)


def _block_slices(J0: int, J: int):
    sizes = [2 ** J0 - 1] + [2 ** j for j in range(J0, J)]
    out, pos = [], 0
    for s in sizes:
        out.append((pos, s))
        pos += s
    return out


def _wavelet_quadform(apply_op, J0: int, J: int, replicate: bool):
    """Diagonal ``w_i^T A w_i`` over multiscale indices with interior sharing."""
    dim = 2 ** J - 1
    qs = np.empty(dim)

    def qform(i):
        e = np.zeros(dim)
        e[i] = 1.0
        w = fwt_inverse(e, J0, J)
        return float(np.real(np.vdot(w, apply_op(w))))

    for pos, size in _block_slices(J0, J):
        if not replicate or size <= 4:
            for t in range(size):
                qs[pos + t] = qform(pos + t)
            continue
        qs[pos] = qform(pos)
        rep = qform(pos + 1)
        qs[pos + 1:pos + size - 1] = rep
        qs[pos + size - 1] = qform(pos + size - 1)
    return qs


def wavelet_precond_build(op, J: int, J0: int = 2, d: int = 2,
                          kron_parts=None, replicate: bool = True) -> PrecondSpec:
    """Build the diagonal wavelet preconditioner of a coercive operator.

    For 1D operators the diagonal entries ``w_i^T A w_i`` are computed by
    synthesizing one wavelet per needed index; translation invariance lets
    all interior wavelets of a level share one representative entry.  For
    tensorized 2D operators pass ``kron_parts = (q0, M, A)`` meaning
    ``q0 * M (x) M + M (x) A + A (x) M``; the diagonal then factorizes into
    1D quadratic-form tables.  Entries must be strictly positive.
    """
    if d != 2:
        raise ValueError("wavelet preconditioning requires order d=2")
    if kron_parts is not None:
        q0, M, A = kron_parts
        qM = _wavelet_quadform(_as_apply(M), J0, J, replicate)
        qA = _wavelet_quadform(_as_apply(A), J0, J, replicate)
        diag = (q0 * np.outer(qM, qM) + np.outer(qA, qM)
                + np.outer(qM, qA)).ravel(order="F")
        twod = True
    else:
        diag = _wavelet_quadform(_as_apply(op), J0, J, replicate)
        twod = False
    if np.any(~np.isfinite(diag)) or np.any(diag <= 0):
        raise ValueError("operator is not positive on the wavelet diagonal")
    return PrecondSpec(1.0 / np.sqrt(diag), J0, J, twod)
