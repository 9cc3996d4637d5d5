"""``qsl`` command line: classify, weyl, spectrum, expand, green, selftest.

Exit status is 0 on success, 1 for bad input (configuration, arguments,
preconditions) and 2 when a computation fails numerically.  Every file written
gets a ``<stem>.config.json`` sidecar holding the resolved configuration and
the subcommand flags, so a run can be repeated exactly.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .csvio import write_csv, write_json, write_lattice_function
from .errors import NumericFailure, QslError
from .expand import GreenKernel, parseval_report, reconstruct
from .lattice import GridFunction
from .potential import load_table, materialize
from .selftest import run_selftest
from .spectrum import find_eigenvalues
from .weyl import Method, classify, disk_ladder, m_function
from .solve import solution_pair

__all__ = ["main", "parse_lambda"]

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL = re.compile(rf"^[+-]?{_NUM}$")
_IMAG = re.compile(rf"^(?P<sign>[+-]?)(?P<im>{_NUM})?i$")
_FULL = re.compile(rf"^(?P<re>[+-]?{_NUM})(?P<sign>[+-])(?P<im>{_NUM})?i$")


class UsageError(QslError):
    pass


def parse_lambda(text: str) -> complex:
    """Parse ``a``, ``bi``, ``a+bi`` or ``a-bi``; whitespace is rejected."""
    if _REAL.match(text):
        return complex(float(text), 0.0)
    m = _FULL.match(text) or _IMAG.match(text)
    if m is None:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a+bi")
    im = float(m["im"]) if m["im"] is not None else 1.0
    re_part = float(m["re"]) if "re" in m.groupdict() else 0.0
    return complex(re_part, -im if m["sign"] == "-" else im)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--q", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-outer", dest="n_outer", type=int)
    p.add_argument("--n-inner", dest="n_inner", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--lambda-min", dest="lambda_min", type=float)
    p.add_argument("--lambda-max", dest="lambda_max", type=float)
    p.add_argument("--bisection-tol", dest="bisection_tol", type=float)
    p.add_argument("--report-tol", dest="report_tol", type=float)


_OVERRIDES = ("out_dir", "q", "alpha", "n_outer", "n_inner", "grid", "lambda_min", "lambda_max",
              "bisection_tol", "report_tol")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsl", description="q-Sturm-Liouville spectral solver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="limit-point / limit-circle verdict and radius ladder")
    _common(p)
    p.add_argument("--lambda", dest="lam", type=parse_lambda, default=complex(1, 1))

    p = sub.add_parser("weyl", help="m(lambda) on a grid, both methods")
    _common(p)
    p.add_argument("--lambda", dest="lams", type=parse_lambda, action="append",
                   help="explicit point (repeatable); overrides the grid")
    p.add_argument("--re-min", type=float, default=0.0)
    p.add_argument("--re-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--im", type=float, default=1.0)

    p = sub.add_parser("spectrum", help="eigenvalues, residues and eigenfunctions")
    _common(p)

    p = sub.add_parser("expand", help="eigenfunction expansion of a test function")
    _common(p)
    p.add_argument("--f", dest="f_path", help="test function in the lattice CSV format (default: bump)")
    p.add_argument("--K", type=int, help="number of eigenfunctions (default: all found)")
    p.add_argument("--shift-lambda", type=parse_lambda, default=complex(0, 1))

    p = sub.add_parser("green", help="row of the Green's function G(x, ., lambda)")
    _common(p)
    p.add_argument("--lambda", dest="lam", type=parse_lambda, default=complex(1, 1))
    p.add_argument("--x-index", type=int, help="lattice index n of x = q^n (default: window middle)")

    p = sub.add_parser("selftest", help="run the invariant suite")
    _common(p)
    p.add_argument("--seed", type=int, default=20240101)
    return parser


# writers ---------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


class _Outputs:
    """Writes data files plus their config sidecars into one directory."""

    def __init__(self, cfg: RunConfig, command: str, flags: dict):
        self.dir = Path(cfg.out_dir)
        self.sidecar = {"command": command, "config": cfg.to_dict(),
                        "flags": {k: _jsonable(v) for k, v in sorted(flags.items())}}
        self.written = []

    def _path(self, name):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        self.written.append(path)
        return path

    def _side(self, path):
        write_json(self.sidecar, path.with_name(path.stem + ".config.json"))

    def csv(self, name, header, rows):
        path = self._path(name)
        write_csv(header, rows, path)
        self._side(path)

    def lattice_function(self, name, f):
        path = self._path(name)
        write_lattice_function(f, path)
        self._side(path)

    def json(self, name, obj):
        path = self._path(name)
        write_json(obj, path)
        self._side(path)


# subcommands -----------------------------------------------------------------

def _classify(cfg, args, out):
    u = cfg.potential_on_lattice()
    res = classify(args.lam, u, tol=cfg.report_tol, alpha=cfg.alpha)
    disks = {d.b_index: d for d in disk_ladder(solution_pair(args.lam, u, cfg.alpha))}
    rows = []
    for (b, r), lr in zip(res.radii, res.log_radii):
        c = disks[b].center
        rows.append([b, r, lr, c.real, c.imag])
    out.csv("classify_ladder.csv", ["b_index", "radius", "log_radius", "re_center", "im_center"], rows)
    first = math.exp(res.log_radii[0]) if res.log_radii else math.nan
    last = math.exp(res.log_radii[-1]) if res.log_radii else math.nan
    print(f"{res.verdict.value},{last:.17g},{first:.17g}")


def _weyl(cfg, args, out):
    u = cfg.potential_on_lattice()
    if args.lams:
        lams = args.lams
    else:
        if args.points < 1:
            raise UsageError("--points must be at least 1")
        lams = [complex(x, args.im) for x in np.linspace(args.re_min, args.re_max, args.points)]
    rows = []
    for lam in lams:
        disk = m_function(lam, u, method=Method.DISK_CENTER, alpha=cfg.alpha)
        dec = m_function(lam, u, method=Method.DECAYING_SOLUTION, alpha=cfg.alpha)
        rows.append([lam.real, lam.imag, disk.m.real, disk.m.imag, dec.m.real, dec.m.imag, disk.uncertainty])
    out.csv("weyl_m.csv", ["re_lambda", "im_lambda", "re_m_disk", "im_m_disk", "re_m_decay", "im_m_decay",
                           "uncertainty"], rows)


def _spectrum(cfg, u=None):
    u = cfg.potential_on_lattice() if u is None else u
    return find_eigenvalues(cfg.lambda_min, cfg.lambda_max, cfg.grid, cfg.bisection_tol, u, alpha=cfg.alpha)


def _spectrum_cmd(cfg, args, out):
    sp = _spectrum(cfg)
    rows = [[k, p.lambda_n, p.residue_n, p.norm, p.bracket[0], p.bracket[1]] for k, p in enumerate(sp.pairs)]
    out.csv("spectrum.csv", ["index", "lambda", "residue", "norm_check", "bracket_lo", "bracket_hi"], rows)
    for k, p in enumerate(sp.pairs):
        out.lattice_function(f"eigenfunction_{k:03d}.csv", p.psi_n)
    print(f"{len(sp)} eigenvalues in [{cfg.lambda_min:g}, {cfg.lambda_max:g}]")


def _test_function(cfg, args):
    lat = cfg.lattice
    if args.f_path:
        return materialize(load_table(args.f_path, lat), lat)
    v = np.zeros(lat.size)
    for n, val in ((10, 1.0), (11, 2.0), (12, 1.0)):
        if not lat.contains(n):
            raise UsageError(f"default bump needs indices 10..12 inside the window; pass --f")
        v[lat.pos(n)] = val
    return GridFunction(lat, v)


def _expand(cfg, args, out):
    f = _test_function(cfg, args)
    sp = _spectrum(cfg)
    report = parseval_report(f, sp, args.K, lam=args.shift_lambda)
    rec, _ = reconstruct(f, sp, report.K, report.coefficients)
    doc = report.to_dict()
    doc["eigenvalues"] = [float(x) for x in sp.eigenvalues[:report.K]]
    out.json("expansion.json", doc)
    out.lattice_function("reconstruction.csv", rec)
    print(f"K={report.K} relative Parseval gap {doc['relative_gap']:.3g}, "
          f"pointwise residual {report.pointwise_max_residual:.3g}")


def _green(cfg, args, out):
    lat = cfg.lattice
    x = lat.mid if args.x_index is None else args.x_index
    if not lat.contains(x):
        raise UsageError(f"--x-index {x} lies outside the window [{lat.n_outer}, {lat.n_inner}]")
    kernel = GreenKernel(args.lam, cfg.potential_on_lattice(), alpha=cfg.alpha)
    out.lattice_function("green_slice.csv", kernel.row(x))


def _selftest(cfg, args, out):
    checks = run_selftest(cfg, args.seed)
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 1


_COMMANDS = {"classify": _classify, "weyl": _weyl, "spectrum": _spectrum_cmd, "expand": _expand,
             "green": _green, "selftest": _selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    flags = {k: v for k, v in vars(args).items()
             if k not in _OVERRIDES and k not in ("command", "config") and v is not None}
    try:
        cfg = parse_config(args.config, overrides)
        out = _Outputs(cfg, args.command, flags)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, cat, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            status = _COMMANDS[args.command](cfg, args, out)
    except NumericFailure as exc:
        print(f"qsl: numeric failure: {exc}", file=sys.stderr)
        return 2
    except QslError as exc:
        print(f"qsl: error: {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
