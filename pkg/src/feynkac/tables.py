"""Preset experiment grids with frozen reference values.

Each preset expands to an ordered tuple of :class:`RowSpec`.  Rows that share
a ``group`` form one convergence sequence: observed rates are computed
between consecutive rows of a group against the ``var`` column (``N`` for
time studies, mesh count ``2^J`` for space studies).  ``expected`` carries
the reference value of the row's headline error column and is appended to
CSV output for side-by-side comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .problem import make_problem
from .stepper import Discretization, SolveReport, run_named_scheme

__all__ = ["RowSpec", "TablePreset", "preset", "available_tables",
           "run_row", "observed_rate"]


@dataclass(frozen=True)
class RowSpec:
    case: str
    scheme: str
    alpha: float
    gamma: float
    p: complex = 0.0
    sigma: float | None = None
    T: float = 0.5
    K: float | None = None
    d: int = 2
    J: int = 4
    N: int = 64
    mesh: str = "uniform"
    grade: float = 2.0
    solver: str = "direct"
    precond: str = "none"
    J0: int = 2
    group: str = ""
    var: float = 0.0
    headline: str = "err2"
    expected: float = float("nan")
    expected_iters: float = float("nan")
    label: str = ""


@dataclass(frozen=True)
class TablePreset:
    table_id: str
    title: str
    rows: tuple[RowSpec, ...]
    note: str = ""


def observed_rate(err_prev: float, err_cur: float, var_prev: float,
                  var_cur: float) -> float:
    if not (err_prev > 0.0 and err_cur > 0.0 and var_cur != var_prev):
        return float("nan")
    return math.log(err_prev / err_cur) / math.log(var_cur / var_prev)


def run_row(row: RowSpec, tol: float = 1e-8, restart: int = 30) -> SolveReport:
    problem = make_problem(row.case, row.alpha, row.gamma, p=row.p,
                           sigma=row.sigma, K=row.K, T=row.T)
    base, _, step = row.scheme.partition("-")
    disc = Discretization(d=row.d, J=row.J, N=row.N, stepping=step,
                          mesh=row.mesh, grade=row.grade, solver=row.solver,
                          precond=row.precond, J0=row.J0, tol=tol,
                          restart=restart)
    return run_named_scheme(row.scheme, problem, disc)


# ---------------------------------------------------------------------------
# reference data
# ---------------------------------------------------------------------------

_T1_NS = (40, 60, 80)
_T1_REF = {
    (0.4, "I-FBDF"): (6.5141e-04, 4.3413e-04, 3.2553e-04),
    (0.4, "I-PI"): (1.2072e-04, 6.8519e-05, 4.5816e-05),
    (0.4, "II-FBDF"): (5.9163e-05, 3.9451e-05, 2.9582e-05),
    (0.4, "II-PI"): (5.4194e-06, 2.8337e-06, 1.7823e-06),
    (0.8, "I-FBDF"): (3.5561e-04, 2.3722e-04, 1.7796e-04),
    (0.8, "I-PI"): (1.1469e-05, 5.5719e-06, 3.3288e-06),
    (0.8, "II-FBDF"): (1.5873e-04, 1.0591e-04, 7.9456e-05),
    (0.8, "II-PI"): (6.8923e-05, 4.2399e-05, 3.0023e-05),
}

_T2_REF = {
    (2, "I-FBDF"): (8.1510e-04, 2.0346e-04, 5.0855e-05),
    (2, "I-PI"): (8.4143e-04, 2.0926e-04, 5.2191e-05),
    (2, "II-FBDF"): (7.4549e-04, 1.8564e-04, 4.6337e-05),
    (2, "II-PI"): (7.6267e-04, 1.8992e-04, 4.6337e-05),
    (3, "I-FBDF"): (1.6566e-04, 1.9311e-05, 2.2987e-06),
    (3, "I-PI"): (1.1864e-04, 1.2894e-05, 1.4502e-06),
    (3, "II-FBDF"): (1.2261e-04, 1.3849e-05, 1.6078e-06),
    (3, "II-PI"): (1.1092e-04, 1.2171e-05, 1.3834e-06),
}

_T2B_REF = {
    ("I-PI", 2, 0.4): (4.8153e-03, 1.3645e-03, 3.8919e-04),
    ("I-PI", 2, 0.7): (2.8744e-03, 6.7345e-04, 1.5912e-04),
    ("I-PI", 3, 0.2): (3.3202e-04, 5.0044e-05, 7.6693e-06),
    ("I-PI", 3, 0.4): (1.9048e-04, 2.3496e-05, 2.9378e-06),
    ("II-FBDF", 2, 0.4): (4.3742e-03, 1.2314e-03, 3.4975e-04),
    ("II-FBDF", 2, 0.7): (2.5524e-03, 5.9800e-04, 1.4137e-04),
    ("II-FBDF", 3, 0.2): (3.1818e-04, 4.8008e-05, 7.3572e-06),
    ("II-FBDF", 3, 0.4): (1.8400e-04, 2.2717e-05, 2.8386e-06),
}

_T3_NS = (60, 80, 100)
_T3_REF = {
    ("Iprime-PI", 0.0, "uniform"): (7.0536e-03, 6.2912e-03, 5.7783e-03),
    ("Iprime-PI", 0.0, "graded"): (3.6148e-03, 3.0007e-03, 2.6035e-03),
    ("Iprime-PI", 5.0, "uniform"): (5.7899e-04, 5.1642e-04, 4.7431e-04),
    ("Iprime-PI", 5.0, "graded"): (2.9672e-04, 2.4632e-04, 2.1371e-04),
    ("II-PI", 0.0, "uniform"): (4.9355e-04, 4.0772e-04, 3.5354e-04),
    ("II-PI", 0.0, "graded"): (2.5797e-04, 1.8862e-04, 1.4824e-04),
    ("II-PI", 5.0, "uniform"): (4.0513e-05, 3.3468e-05, 2.9020e-05),
    ("II-PI", 5.0, "graded"): (2.1176e-05, 1.5483e-05, 1.2168e-05),
}

_T4_JS = (4, 5, 6)
_T4_REF = {
    (1.5, 0.5): {"err2": (7.5237e-06, 5.2053e-07, 3.4986e-08),
                 "gmres": (46.0, 45.0, 49.0),
                 "bicgstab": (30.3, 28.4, 36.3)},
    (1.8, 0.6): {"err2": (4.0444e-06, 2.5297e-07, 1.5677e-08),
                 "gmres": (21.0, 28.0, 41.0),
                 "bicgstab": (12.5, 18.0, 28.0)},
}

_T5_JS = (5, 6, 7)
_T5_REF = {
    0.3: {"err2": (5.8984e-06, 2.8107e-06, 1.4183e-06),
          ("gmres", "none"): (88.0, 166.3, 334.9),
          ("gmres", "wavelet"): (35.0, 38.0, 40.0),
          ("bicgstab", "none"): (44.4, 95.7, 203.8),
          ("bicgstab", "wavelet"): (21.0, 23.0, 24.0)},
    0.8: {"err2": (2.4580e-05, 1.2492e-05, 6.3009e-06),
          ("gmres", "none"): (58.1, 94.2, 155.7),
          ("gmres", "wavelet"): (32.0, 35.0, 35.0),
          ("bicgstab", "none"): (35.0, 65.5, 136.4),
          ("bicgstab", "wavelet"): (18.5, 20.9, 20.9)},
}

_T6_NS = (20, 40, 60)
_T6_REF = {
    (2.0, 0.5, "II-FBDF"): (9.9484e-05, 4.9881e-05, 3.3285e-05),
    (2.0, 0.5, "II-PI"): (1.8120e-05, 6.4990e-06, 3.5599e-06),
    (2.0, 0.8, "II-FBDF"): (1.9401e-04, 9.7205e-05, 6.4847e-05),
    (2.0, 0.8, "II-PI"): (9.4674e-05, 4.1306e-05, 2.5415e-05),
    (1.6, 0.5, "II-FBDF"): (2.9375e-04, 1.4734e-04, 9.8339e-05),
    (1.6, 0.5, "II-PI"): (5.4765e-05, 1.9697e-05, 1.0819e-05),
    (1.6, 0.8, "II-FBDF"): (5.8284e-04, 2.9237e-04, 1.9514e-04),
    (1.6, 0.8, "II-PI"): (2.9075e-04, 1.2705e-04, 7.8226e-05),
}
_T6_J = {2.0: 8, 1.6: 6}

_T7_JS = (3, 4, 5)
_T7_REF = {
    (1 + 1j, 2.0): (1.8039e-02, 4.7323e-03, 1.1970e-03),
    (10j, 2.0): (1.7092e-02, 4.4882e-03, 1.1354e-03),
    (0.0, 1.3): (2.0181e-03, 3.2128e-04, 4.9939e-05),
    (1 + 1j, 1.6): (5.1635e-03, 1.0086e-03, 1.8940e-04),
}

_T8_NS = (120, 150, 180)
_T8_REF = {
    (0.2, "FWD-FBDF"): (3.5841e-04, 2.8670e-04, 2.3890e-04),
    (0.2, "FWD-PI"): (1.3009e-04, 9.9597e-05, 8.0061e-05),
    (0.6, "FWD-FBDF"): (1.9803e-04, 1.5842e-04, 1.3202e-04),
    (0.6, "FWD-PI"): (9.9421e-06, 6.9837e-06, 5.2316e-06),
}

_T9_JS = (3, 4, 5)
_T9_REF = {
    (1.2, 1 + 1j): (1.1063e-02, 2.5275e-03, 5.9327e-04),
    (1.6, 10 + 5j): (1.8155e-02, 4.3328e-03, 1.0042e-03),
    (1.8, 5.0): (1.2438e-02, 2.9620e-03, 6.9960e-04),
    (2.0, 1j): (2.6211e-02, 6.5621e-03, 1.6411e-03),
}


# ---------------------------------------------------------------------------
# preset builders
# ---------------------------------------------------------------------------

def _t1(scale: str):
    rows = []
    for gamma in (0.4, 0.8):
        for scheme in ("I-FBDF", "I-PI", "II-FBDF", "II-PI"):
            ref = _T1_REF[(gamma, scheme)]
            for N, ex in zip(_T1_NS, ref):
                rows.append(RowSpec("ex41", scheme, 1.6, gamma, p=3.0,
                                    sigma=2.0, T=0.5, d=2, J=9, N=N,
                                    group=f"{scheme}/gamma={gamma}",
                                    var=float(N), expected=ex))
    return TablePreset("t1", "Time convergence, case ex41 "
                             "(alpha=1.6, p=3, d=2, J=9)", tuple(rows))


def _t2(scale: str):
    rows = []
    grids = {2: ((4, 5, 6), 2), 3: ((3, 4, 5), 3)}
    for d, (Js, mul) in grids.items():
        if scale == "desk" and d == 3:
            Js = Js[:-1]
        for scheme in ("I-FBDF", "I-PI", "II-FBDF", "II-PI"):
            ref = _T2_REF[(d, scheme)]
            for J, ex in zip(Js, ref):
                rows.append(RowSpec("ex41", scheme, 1.2, 0.6, p=3.0,
                                    sigma=2.0, T=0.5, d=d, J=J,
                                    N=2 ** (mul * J),
                                    group=f"{scheme}/d={d}",
                                    var=float(2 ** J), headline="err1",
                                    expected=ex))
    for scheme in ("I-PI", "II-FBDF"):
        for d, gamma in ((2, 0.4), (2, 0.7), (3, 0.2), (3, 0.4)):
            mul = 2 if d == 2 else 3
            Js = _jtrim((3, 4, 5), scale == "desk" and d == 3)
            ref = _T2B_REF[(scheme, d, gamma)]
            for J, ex in zip(Js, ref):
                rows.append(RowSpec("ex41", scheme, 1.2, gamma, p=3.0,
                                    sigma=2.0, T=0.5, d=d, J=J,
                                    N=2 ** (mul * J),
                                    group=f"mixed/{scheme}/d={d}/gamma={gamma}",
                                    var=float(2 ** J), headline="err1",
                                    expected=ex, label="mixed-order"))
    return TablePreset("t2", "Space convergence, case ex41 (alpha=1.2)",
                       tuple(rows),
                       note="includes the mixed-order block")


def _jtrim(Js, trim):
    return Js[:-1] if trim else Js


def _t3(scale: str):
    rows = []
    for scheme in ("Iprime-PI", "II-PI"):
        for p in (0.0, 5.0):
            for mesh in ("uniform", "graded"):
                ref = _T3_REF[(scheme, p, mesh)]
                for N, ex in zip(_T3_NS, ref):
                    rows.append(RowSpec("ex41", scheme, 1.7, 0.8, p=p,
                                        sigma=0.3, T=0.5, d=2, J=9, N=N,
                                        mesh=mesh, grade=2.0,
                                        group=f"{scheme}/p={p}/{mesh}",
                                        var=float(N), expected=ex))
    return TablePreset("t3", "Uniform vs graded meshes, case ex41 "
                             "(alpha=1.7, sigma=0.3, gamma=0.8)", tuple(rows))


def _t4(scale: str):
    rows = []
    for (alpha, gamma), ref in _T4_REF.items():
        for solver in ("direct", "gmres", "bicgstab"):
            for i, J in enumerate(_T4_JS):
                if solver == "direct" and scale == "desk" and J > 5:
                    continue
                its = (ref[solver][i] if solver in ("gmres", "bicgstab")
                       else float("nan"))
                rows.append(RowSpec("ex42", "II-PI", alpha, gamma, p=0.0,
                                    T=0.5, d=3, J=J, N=2 ** (2 * J),
                                    solver=solver, J0=2,
                                    group=f"a={alpha}/g={gamma}/{solver}",
                                    var=float(2 ** J),
                                    expected=ref["err2"][i],
                                    expected_iters=its, label=solver))
    return TablePreset("t4", "2D solver comparison, case ex42 "
                             "(d=3, N=4^J)", tuple(rows))


def _t5(scale: str):
    rows = []
    variants = (("gmres", "none", "GMRES"),
                ("gmres", "wavelet", "Pre-GMRES"),
                ("bicgstab", "none", "Bi-CGSTAB"),
                ("bicgstab", "wavelet", "Pre-Bi-CGSTAB"))
    for gamma, ref in _T5_REF.items():
        for solver, precond, label in variants:
            for i, J in enumerate(_T5_JS):
                rows.append(RowSpec("ex42", "II-FBDF", 1.5, gamma, p=2.0,
                                    T=0.5, d=2, J=J, N=2 ** J,
                                    solver=solver, precond=precond, J0=1,
                                    group=f"g={gamma}/{label}",
                                    var=float(2 ** J),
                                    expected=ref["err2"][i],
                                    expected_iters=ref[(solver, precond)][i],
                                    label=label))
    return TablePreset("t5", "Wavelet preconditioning, case ex42 "
                             "(d=2, alpha=1.5, N=2^J)", tuple(rows))


def _t6(scale: str):
    rows = []
    for alpha in (2.0, 1.6):
        J = _T6_J[alpha]
        for gamma in (0.5, 0.8):
            for scheme in ("II-FBDF", "II-PI"):
                ref = _T6_REF[(alpha, gamma, scheme)]
                for N, ex in zip(_T6_NS, ref):
                    rows.append(RowSpec("ex43", scheme, alpha, gamma,
                                        p=1 + 1j, sigma=2.0, T=0.5, d=3,
                                        J=J, N=N,
                                        group=f"a={alpha}/g={gamma}/{scheme}",
                                        var=float(N), expected=ex))
    return TablePreset("t6", "Complex-p time convergence, case ex43 "
                             "(U=x, d=3)", tuple(rows))


def _t7(scale: str):
    N = 2 ** 15 if scale == "full" else 2 ** 12
    rows = []
    for (p, alpha), ref in _T7_REF.items():
        for J, ex in zip(_T7_JS, ref):
            rows.append(RowSpec("ex43_colloc", "COLLOC-PI", alpha, 0.5, p=p,
                                sigma=2.0, T=0.5, d=4, J=J, N=N,
                                group=f"p={p}/a={alpha}", var=float(2 ** J),
                                headline="maxerr", expected=ex))
    return TablePreset("t7", "Collocation space convergence, case "
                             "ex43_colloc (d=4)", tuple(rows),
                       note="reference values were generated at N=2^15; "
                            "desk scale uses N=2^12")


def _t8(scale: str):
    rows = []
    for gamma in (0.2, 0.6):
        for scheme in ("FWD-FBDF", "FWD-PI"):
            ref = _T8_REF[(gamma, scheme)]
            for N, ex in zip(_T8_NS, ref):
                rows.append(RowSpec("ex44", scheme, 2.0, gamma, p=1 + 1j,
                                    sigma=2.0, T=0.5, d=3, J=9, N=N,
                                    group=f"time/g={gamma}/{scheme}",
                                    var=float(N), expected=ex))
    for (alpha, p), ref in _T9_REF.items():
        for J, ex in zip(_T9_JS, ref):
            rows.append(RowSpec("ex44", "FWD-FBDF", alpha, 0.5, p=p,
                                sigma=2.0, T=0.5, d=2, J=J, N=2 ** (2 * J),
                                group=f"space/a={alpha}/p={p}",
                                var=float(2 ** J), expected=ex,
                                label="space"))
    return TablePreset("t8", "Forward model, case ex44 (time and space "
                             "studies)", tuple(rows))


def _fig1(scale: str):
    rows = []
    for alpha in (1.2, 1.5, 1.8):
        for J in (3, 4, 5):
            rows.append(RowSpec("ex43", "II-FBDF", alpha, 0.5, p=1 + 1j,
                                sigma=2.0, T=0.5, d=2, J=J, N=2 ** (2 * J),
                                group=f"a={alpha}", var=float(2 ** J),
                                headline="err1"))
    return TablePreset("fig1", "Space convergence of the FBDF scheme, "
                               "case ex43 (d=2, N=4^J)", tuple(rows))


_PRESETS = {"t1": _t1, "t2": _t2, "t3": _t3, "t4": _t4, "t5": _t5,
            "t6": _t6, "t7": _t7, "t8": _t8, "fig1": _fig1}


def available_tables():
    return sorted(_PRESETS)


def preset(table_id: str, scale: str = "desk") -> TablePreset:
    if table_id not in _PRESETS:
        raise ValueError(f"unknown table {table_id!r}; "
                         f"choose from {available_tables()}")
    if scale not in ("desk", "full"):
        raise ValueError(f"scale must be 'desk' or 'full', got {scale!r}")
    return _PRESETS[table_id](scale)
