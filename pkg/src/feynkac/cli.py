"""Command-line interface: single runs, convergence sweeps, preset tables.

CSV schema (fixed): ``scheme,alpha,gamma,p_re,p_im,d,J,N,mesh,err2,err1,
maxerr,rate2,rate1,iters,cpu_s``.  The ``table`` subcommand appends an
``expected`` column carrying frozen reference values.  ``FEYNKAC_THREADS``
caps BLAS/numba worker counts; it must take effect before numpy loads, so
it is applied at import time here.
"""

from __future__ import annotations

import os

_threads = os.environ.get("FEYNKAC_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "VECLIB_MAXIMUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import csv
import math
import sys

from .linalg import SolverError
from .problem import available_cases
from .stepper import SCHEME_NAMES
from .tables import (RowSpec, available_tables, observed_rate, preset,
                     run_row)

HEADER = ("scheme", "alpha", "gamma", "p_re", "p_im", "d", "J", "N", "mesh",
          "err2", "err1", "maxerr", "rate2", "rate1", "iters", "cpu_s")


def _fnum(v, fmt):
    if v is None:
        return ""
    try:
        fv = float(v)
    except (TypeError, ValueError):
        return str(v)
    if math.isnan(fv):
        return ""
    return fmt % fv if "%" in fmt else format(fv, fmt)


def _report_fields(report, rate2=float("nan"), rate1=float("nan")):
    return {
        "scheme": report.scheme,
        "alpha": _fnum(report.alpha, "%g"),
        "gamma": _fnum(report.gamma, "%g"),
        "p_re": _fnum(report.p.real if isinstance(report.p, complex)
                      else report.p, "%g"),
        "p_im": _fnum(report.p.imag if isinstance(report.p, complex)
                      else 0.0, "%g"),
        "d": str(report.d),
        "J": str(report.J),
        "N": str(report.N),
        "mesh": report.mesh,
        "err2": _fnum(report.err2, "%.4e"),
        "err1": _fnum(report.err1, "%.4e"),
        "maxerr": _fnum(report.maxerr, "%.4e"),
        "rate2": _fnum(rate2, "%.2f"),
        "rate1": _fnum(rate1, "%.2f"),
        "iters": _fnum(report.iters, "%.1f"),
        "cpu_s": _fnum(report.cpu_s, ".4g"),
    }


class _Emitter:
    """Streams aligned console rows and collects CSV rows."""

    def __init__(self, header):
        self.header = header
        self.widths = [max(9, len(h)) for h in header]
        self.rows = []
        self._printed_header = False

    def emit(self, fields):
        row = [fields.get(h, "") for h in self.header]
        self.rows.append(row)
        if not self._printed_header:
            print("  ".join(h.ljust(w) for h, w in zip(self.header,
                                                       self.widths)))
            self._printed_header = True
        print("  ".join(c.ljust(w) for c, w in zip(row, self.widths)))
        sys.stdout.flush()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header)
            writer.writerows(self.rows)


def _read_config(path):
    """Flat ``key=value`` defaults; command-line flags override."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (need key=value): {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            for cast in (int, float):
                try:
                    out[key] = cast(val)
                    break
                except ValueError:
                    continue
            else:
                out[key] = val
    return out


def _intlist(text):
    return [int(tok) for tok in str(text).replace(" ", "").split(",") if tok]


def _add_run_flags(sp):
    sp.add_argument("--case", default="ex41", choices=available_cases())
    sp.add_argument("--scheme", default="II-PI", choices=SCHEME_NAMES)
    sp.add_argument("--alpha", type=float, default=1.6)
    sp.add_argument("--gamma", type=float, default=0.5)
    sp.add_argument("--p-re", type=float, default=0.0, dest="p_re")
    sp.add_argument("--p-im", type=float, default=0.0, dest="p_im")
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--T", type=float, default=None)
    sp.add_argument("--K", type=float, default=None)
    sp.add_argument("--d", type=int, default=2, choices=(2, 3, 4))
    sp.add_argument("-J", "--J", type=int, default=4)
    sp.add_argument("--nt", type=int, default=64)
    sp.add_argument("--mesh", choices=("uniform", "graded"),
                    default="uniform")
    sp.add_argument("--grade", type=float, default=2.0)
    sp.add_argument("--solver", default="direct",
                    choices=("direct", "gauss", "gmres", "bicgstab"))
    sp.add_argument("--precond", choices=("none", "wavelet"), default="none")
    sp.add_argument("--J0", type=int, default=2)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--restart", type=int, default=30)
    sp.add_argument("--out", default=None)
    sp.add_argument("--config", default=None)


def _row_from_args(args, J, N):
    return RowSpec(case=args.case, scheme=args.scheme, alpha=args.alpha,
                   gamma=args.gamma, p=complex(args.p_re, args.p_im),
                   sigma=args.sigma, T=args.T if args.T is not None else 0.5,
                   K=args.K, d=args.d, J=J, N=N, mesh=args.mesh,
                   grade=args.grade,
                   solver="direct" if args.solver == "gauss" else args.solver,
                   precond=args.precond, J0=args.J0)


def _cmd_solve(args):
    em = _Emitter(list(HEADER))
    report = run_row(_row_from_args(args, args.J, args.nt),
                     tol=args.tol, restart=args.restart)
    em.emit(_report_fields(report))
    if not report.converged:
        print("warning: iterative solver did not reach tolerance; "
              "best iterate reported", file=sys.stderr)
    if args.out:
        em.write_csv(args.out)
    return 0


def _cmd_converge(args):
    if args.J_list:
        Js = _intlist(args.J_list)
        sweeps = [(J, args.nt if not args.nt_rule else 2 ** (args.nt_rule * J))
                  for J in Js]
        varfn = lambda J, N: float(2 ** J)
    elif args.nt_list:
        sweeps = [(args.J, N) for N in _intlist(args.nt_list)]
        varfn = lambda J, N: float(N)
    else:
        raise ValueError("converge needs --J-list or --nt-list")
    em = _Emitter(list(HEADER))
    prev = None
    ok = True
    for J, N in sweeps:
        report = run_row(_row_from_args(args, J, N),
                         tol=args.tol, restart=args.restart)
        var = varfn(J, N)
        r2 = r1 = float("nan")
        if prev is not None:
            r2 = observed_rate(prev[0].err2, report.err2, prev[1], var)
            r1 = observed_rate(prev[0].err1, report.err1, prev[1], var)
        em.emit(_report_fields(report, r2, r1))
        ok = ok and report.converged
        prev = (report, var)
    if args.out:
        em.write_csv(args.out)
    return 0 if ok else 3


def _cmd_table(args):
    tp = preset(args.table_id, args.scale)
    print(f"# {tp.table_id}: {tp.title}")
    if tp.note:
        print(f"# {tp.note}")
    em = _Emitter(list(HEADER) + ["expected"])
    last = {}
    ok = True
    for row in tp.rows:
        report = run_row(row, tol=args.tol, restart=args.restart)
        err = getattr(report, {"err2": "err2", "err1": "err1",
                               "maxerr": "maxerr"}[row.headline])
        r2 = r1 = float("nan")
        if row.group in last:
            perr, pvar = last[row.group]
            r2 = observed_rate(perr[0], report.err2, pvar, row.var)
            r1 = observed_rate(perr[1], report.err1, pvar, row.var)
        last[row.group] = ((report.err2, report.err1), row.var)
        fields = _report_fields(report, r2, r1)
        fields["expected"] = _fnum(row.expected, "%.4e")
        em.emit(fields)
        ok = ok and report.converged
    if args.out:
        em.write_csv(args.out)
    return 0 if ok else 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="feynkac",
        description="Galerkin and collocation solvers for tempered "
                    "fractional Feynman-Kac equations")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run one discretization")
    _add_run_flags(sp)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("converge", help="sweep N or J and report rates")
    _add_run_flags(sp)
    sp.add_argument("--J-list", default=None, dest="J_list")
    sp.add_argument("--nt-list", default=None, dest="nt_list")
    sp.add_argument("--nt-rule", type=int, default=0, dest="nt_rule",
                    help="with --J-list, set N = 2^(rule*J)")
    sp.set_defaults(func=_cmd_converge)

    sp = sub.add_parser("table", help="reproduce a preset experiment table")
    sp.add_argument("table_id", choices=available_tables())
    sp.add_argument("--scale", choices=("desk", "full"), default="desk")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--restart", type=int, default=30)
    sp.add_argument("--out", default=None)
    sp.add_argument("--config", default=None)
    sp.set_defaults(func=_cmd_table)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        try:
            parser.set_defaults(**_read_config(known.config))
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
