"""Command-line front end: ``fockhankel <command> [options]``.

Results go to standard output (or ``--out``) as CSV, or as one JSON object
``{"meta": ..., "data": ...}`` with ``--format json``.  Exit codes: 0 success,
1 computation failure, 2 usage or configuration error, 3 a verify check
reported "violated".
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import re
import sys

import numpy as np

from . import symbols as sym

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_VIOLATED = 0, 1, 2, 3

_NUM = r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?"
_RE_COMPLEX = re.compile(rf"^(?P<re>[+-]?{_NUM})(?:(?P<im>[+-](?:{_NUM})?)i)?$")
_RE_IMAG = re.compile(rf"^(?P<im>[+-]?(?:{_NUM})?)i$")

# config file sections and the option names they may set
CONFIG_KEYS = {
    "general": {"m", "p", "r", "format"},
    "lattice": {"delta", "R"},
    "quadrature": {"rho"},
    "berezin": {"kind"},
    "hankel": {"N", "L", "tol", "directions", "radii"},
    "vanish": {"tol_vanish", "estimator", "mode"},
    "verify": {"t", "ymin", "ymax", "ny", "M", "pprime", "c", "d", "sigma", "z_min"},
}


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """``a+bi`` / ``a-bi`` / ``a`` / ``bi`` without spaces."""
    def part(x):
        return float(x + "1") if x in ("", "+", "-") else float(x)

    mt = _RE_COMPLEX.match(text)
    if mt:
        return complex(float(mt.group("re")), part(mt.group("im")) if mt.group("im") is not None else 0.0)
    mt = _RE_IMAG.match(text)
    if mt:
        return complex(0.0, part(mt.group("im")))
    raise argparse.ArgumentTypeError(f"invalid complex literal {text!r}; expected a+bi")


def parse_radii(text: str):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid radius list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("radius list is empty")
    return vals


def positive_float(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def nonneg_int(text: str) -> int:
    x = int(text)
    if x < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return x


def _symbol(text: str):
    try:
        return sym.resolve_symbol(text)
    except sym.SymbolError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# --------------------------------------------------------------------- output


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _cpair(z):
    z = complex(z)
    return [z.real, z.imag]


class Result:
    def __init__(self, meta: dict, data, csv_text: str, violated: bool = False):
        self.meta, self.data, self.csv_text, self.violated = meta, data, csv_text, violated

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps({"meta": self.meta, "data": self.data}, sort_keys=True) + "\n"
        return self.csv_text


# ------------------------------------------------------------------- commands


def cmd_kernel(a):
    from .stablefun import kernel

    k = kernel(a.m, a.z, a.v)
    val = k.to_complex(check=False) if k.logmag <= 700 else complex("nan")
    rows = [[val.real, val.imag, k.logmag, k.phase]]
    return Result({"command": "kernel", "m": a.m, "z": _cpair(a.z), "v": _cpair(a.v)},
                  {"value": _cpair(val), "logmag": k.logmag, "phase": k.phase},
                  _csv(["value_re", "value_im", "logmag", "phase"], rows))


def cmd_norm(a):
    from .spaces import norm_pm

    val = norm_pm(a.symbol, a.p, a.m)
    meta = {"command": "norm", "symbol": sym.to_text(a.symbol), "p": a.p, "m": a.m}
    return Result(meta, {"norm": val}, _csv(["norm"], [[val]]))


def cmd_project(a):
    from .spaces import project

    c = project(a.symbol, a.m, a.L).coeffs
    meta = {"command": "project", "symbol": sym.to_text(a.symbol), "m": a.m, "L": a.L}
    rows = [[k, x.real, x.imag] for k, x in enumerate(c)]
    return Result(meta, {"coeffs": [_cpair(x) for x in c]}, _csv(["k", "c_re", "c_im"], rows))


def _lattice(a, default_delta):
    from .spaces import LatticeSpec

    return LatticeSpec(a.delta if a.delta is not None else default_delta, a.R)


def cmd_berezin(a):
    from .berezin import berezin_grid

    grid = berezin_grid(a.symbol, a.m, a.kind, a.p, _lattice(a, 1.0), a.rho)
    meta = {"command": "berezin", **grid.meta, "delta": a.delta if a.delta else 1.0, "R": a.R}
    return Result(meta, grid.to_dict(), grid.to_csv())


def _report_result(name, a, rep, extra=None):
    meta = {"command": name, "symbol": sym.to_text(a.symbol), **(extra or {}),
            "sup_value": rep.sup_value, "argmax": _cpair(rep.argmax),
            "classification": rep.classify(), "vanishing": rep.vanishing}
    if a.points:
        text = rep.to_csv()
    else:
        text = _csv(["sup_value", "argmax_re", "argmax_im", "classification", "vanishing"],
                    [[rep.sup_value, rep.argmax.real, rep.argmax.imag, rep.classify(),
                      "" if rep.vanishing is None else rep.vanishing]])
    return Result(meta, rep.to_dict(), text)


def cmd_bmo(a):
    from .spaces import bmo_norm

    lat = _lattice(a, a.r / 2)
    rep = bmo_norm(a.symbol, a.r, a.p, lat)
    return _report_result("bmo", a, rep, {"p": a.p, "r": a.r, "delta": lat.delta, "R": lat.R})


def cmd_bo(a):
    from .spaces import bo_norm

    lat = _lattice(a, a.r / 2)
    rep = bo_norm(a.symbol, a.r, lat)
    return _report_result("bo", a, rep, {"r": a.r, "delta": lat.delta, "R": lat.R})


def cmd_vanish(a):
    from .spaces import vanishing_profile

    lat = _lattice(a, a.r / 2)
    rep = vanishing_profile(a.estimator, a.symbol, a.r, a.p, lat, a.tol_vanish)
    return _report_result("vanish", a, rep, {"estimator": a.estimator, "p": a.p, "r": a.r,
                                             "delta": lat.delta, "R": lat.R,
                                             "tol_vanish": a.tol_vanish})


def cmd_carleson(a):
    from .berezin import carleson_lattice_check

    lat = _lattice(a, a.r / 2)
    rep = carleson_lattice_check(a.symbol, a.p, a.r, lat, a.mode, a.tol_vanish)
    return _report_result("carleson", a, rep, {"p": a.p, "r": a.r, "mode": a.mode,
                                               "delta": lat.delta, "R": lat.R})


def cmd_hankel_norm(a):
    from .hankel import build_section, section_norm

    L = 4 * a.N if a.L is None else a.L
    val = section_norm(build_section(a.symbol, a.m, a.N, L))
    meta = {"command": "hankel-norm", "symbol": sym.to_text(a.symbol), "m": a.m, "N": a.N, "L": L}
    return Result(meta, {"norm": val}, _csv(["N", "L", "norm"], [[a.N, L, val]]))


def cmd_hankel_probe(a):
    from .hankel import compactness_verdict, kernel_probe

    dirs = None
    if a.directions is not None:
        dirs = np.exp(2j * np.pi * np.arange(a.directions) / a.directions)
    curve = kernel_probe(a.symbol, a.m, a.radii, dirs, a.L)
    meta = {"command": "hankel-probe", "symbol": sym.to_text(a.symbol), "m": a.m,
            "N": curve.meta["N"], "L": curve.meta["L"], "tol": a.tol}
    if len(curve.radii) >= 4:
        flag, summary = compactness_verdict(curve, a.tol)
        meta.update({"compact_consistent": flag, "summary": summary})
    return Result(meta, curve.to_dict(), curve.to_csv())


def _lemma_result(rep):
    d = rep.to_dict()
    rows = [["lemma", d["lemma"]]]
    rows += [[f"param.{k}", v] for k, v in sorted(d["params"].items())]
    rows += [["grid_size", d["grid_size"]], ["ratio_min", d["ratio_min"]],
             ["ratio_max", d["ratio_max"]], ["argmax", json.dumps(d["argmax"])],
             ["budget", d["budget"]], ["verdict", d["verdict"]]]
    rows += [[f"detail.{k}", json.dumps(v, sort_keys=True)] for k, v in sorted(d["details"].items())]
    return Result({"command": "verify", "check": d["lemma"]}, d, _csv(["field", "value"], rows),
                  violated=rep.violated)


def cmd_verify(a):
    from . import verify as V

    if a.check == "lemma21":
        rep = V.check_lemma21(a.m, a.pprime, a.c, a.d, a.sigma)
    elif a.check == "lemma23":
        if not (0 < a.ymin <= a.ymax) or a.ny < 1:
            raise UsageError("need 0 < ymin <= ymax and ny >= 1")
        rep = V.check_lemma23_series(a.t, np.linspace(a.ymin, a.ymax, a.ny), a.M)
    elif a.check == "kernel-bound":
        rep = V.check_kernel_bound(a.m)
    elif a.check == "split-bounds":
        if a.symbol not in [e.name for e in sym.builtin_catalog()]:
            raise UsageError(f"{a.check} needs a catalog symbol name, got {a.symbol!r}")
        rep = V.check_split_bounds(a.symbol, a.p, a.r, a.m, _lattice(a, 2.0), a.z_min)
    else:
        if a.symbol not in [e.name for e in sym.builtin_catalog()]:
            raise UsageError(f"{a.check} needs a catalog symbol name, got {a.symbol!r}")
        lat = _lattice(a, a.r / 2)
        rep = V.check_equivalence_thm(a.check, a.symbol, a.p, a.r, a.m, lat, a.z_min, a.tol_vanish)
    return _lemma_result(rep)


# --------------------------------------------------------------------- parser


def _common(p, *, m=True, symbol=True):
    p.add_argument("--config", metavar="FILE", help="INI-style config file (key = value per section)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    p.add_argument("--out", metavar="FILE", help="write data output here instead of stdout")
    if m:
        p.add_argument("--m", type=nonneg_int, default=0, help="Sobolev order m (<= 32)")
    if symbol:
        p.add_argument("--symbol", type=_symbol, required=True,
                       help="symbol expression or catalog name")


def _lattice_opts(p, delta_help="r/2"):
    p.add_argument("--delta", type=positive_float, default=None,
                   help=f"lattice spacing (default {delta_help})")
    p.add_argument("--R", type=positive_float, default=12.0, help="lattice truncation radius")


def _report_opts(p):
    p.add_argument("--points", action="store_true", help="emit per-lattice-point rows (CSV)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="fockhankel", description=__doc__.splitlines()[0],
                                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("kernel", help="reproducing kernel K^m(v, z)", formatter_class=fmt)
    _common(p, symbol=False)
    p.add_argument("--z", type=parse_complex, required=True, help="kernel point z (a+bi)")
    p.add_argument("--v", type=parse_complex, required=True, help="evaluation point v (a+bi)")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("norm", help="||g||_{p,m}", formatter_class=fmt)
    _common(p)
    p.add_argument("--p", type=float, default=2.0, help="exponent p >= 1")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("project", help="coefficients <g, b_l> for l = 0..L", formatter_class=fmt)
    _common(p)
    p.add_argument("--L", type=nonneg_int, default=32, help="highest basis index")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("berezin", help="Berezin transform grid", formatter_class=fmt)
    _common(p)
    p.add_argument("--kind", choices=("berezin", "abs_p", "mo"), default="berezin",
                   help="B(g), B(|g|^p) or Berezin mean oscillation")
    p.add_argument("--p", type=float, default=1.0, help="exponent p >= 1 (abs_p, mo)")
    p.add_argument("--rho", type=float, default=8.0, help="truncation radius (>= 6)")
    _lattice_opts(p, "1.0")
    p.set_defaults(func=cmd_berezin)

    for name, func, helptext in (("bmo", cmd_bmo, "disk-mean oscillation BMO_r^p"),
                                 ("bo", cmd_bo, "bounded oscillation BO_r"),
                                 ("vanish", cmd_vanish, "vanishing-at-infinity profile"),
                                 ("carleson", cmd_carleson, "lattice Carleson disk masses")):
        p = sub.add_parser(name, help=helptext, formatter_class=fmt)
        _common(p, m=False)
        if name != "bo":
            p.add_argument("--p", type=float, default=2.0 if name != "carleson" else 1.0,
                           help="exponent p >= 1")
        p.add_argument("--r", type=positive_float, default=1.0, help="disk radius")
        if name == "vanish":
            p.add_argument("--estimator", choices=("bmo", "ba", "bo"), default="bmo",
                           help="oscillation estimator")
        if name == "carleson":
            p.add_argument("--mode", choices=("bounded", "vanishing"), default="bounded",
                           help="report type")
        if name in ("vanish", "carleson"):
            p.add_argument("--tol-vanish", dest="tol_vanish", type=positive_float, default=1e-3,
                           help="vanishing threshold for the outer bins")
        _lattice_opts(p)
        _report_opts(p)
        p.set_defaults(func=func)

    p = sub.add_parser("hankel-norm", help="finite-section estimate of ||H_g|| (p = 2)",
                       formatter_class=fmt)
    _common(p)
    p.add_argument("--N", type=int, default=16, help="domain truncation")
    p.add_argument("--L", type=nonneg_int, default=None, help="projection truncation (default 4N)")
    p.set_defaults(func=cmd_hankel_norm)

    p = sub.add_parser("hankel-probe", help="||H_g k_z|| along rays", formatter_class=fmt)
    _common(p)
    p.add_argument("--radii", type=parse_radii, default=[2.0, 4.0, 6.0, 8.0],
                   help="comma-separated increasing radii")
    p.add_argument("--directions", type=int, default=None,
                   help="number of equally spaced directions (default 8, 1 for radial symbols)")
    p.add_argument("--L", type=nonneg_int, default=None, help="projection truncation (default 4N)")
    p.add_argument("--tol", type=positive_float, default=1e-3, help="compactness tolerance")
    p.set_defaults(func=cmd_hankel_probe)

    p = sub.add_parser("verify", help="lemma and theorem checks", formatter_class=fmt)
    p.add_argument("check", choices=("lemma21", "lemma23", "kernel-bound", "thm28", "thm32",
                                     "split-bounds"))
    _common(p, symbol=False)
    p.add_argument("--symbol", default="conj_z", help="catalog symbol name (thm28, thm32, split-bounds)")
    p.add_argument("--pprime", type=positive_float, default=2.0, help="exponent p' (lemma21)")
    p.add_argument("--c", type=positive_float, default=1.0, help="Gaussian rate c (lemma21)")
    p.add_argument("--d", type=nonneg_int, default=0, help="even power d (lemma21)")
    p.add_argument("--sigma", type=positive_float, default=1.0, help="smallest |z| (lemma21)")
    p.add_argument("--t", type=float, default=1.0, help="series exponent t (lemma23)")
    p.add_argument("--ymin", type=float, default=1.0, help="smallest y (lemma23)")
    p.add_argument("--ymax", type=float, default=50.0, help="largest y (lemma23)")
    p.add_argument("--ny", type=int, default=99, help="number of y samples (lemma23)")
    p.add_argument("--M", type=float, default=1.0, help="lower-bound threshold on y (lemma23)")
    p.add_argument("--p", type=float, default=2.0, help="exponent p (thm28, thm32, split-bounds)")
    p.add_argument("--r", type=positive_float, default=1.0, help="disk radius (thm28, thm32, split-bounds)")
    p.add_argument("--z-min", dest="z_min", type=float, default=2.0,
                   help="smallest |z| used for verdicts (thm28, thm32, split-bounds)")
    p.add_argument("--tol-vanish", dest="tol_vanish", type=positive_float, default=1e-3,
                   help="vanishing threshold (thm32)")
    _lattice_opts(p, "r/2; 2 for split-bounds")
    p.set_defaults(func=cmd_verify)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def apply_config(sub: argparse.ArgumentParser, path: str):
    """Load ``path`` and install its values as defaults on ``sub``; explicit flags win."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for section in cp.sections():
        if section not in CONFIG_KEYS:
            raise UsageError(f"config {path}: unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in CONFIG_KEYS[section]:
                raise UsageError(f"config {path}: unknown key {key!r} in [{section}]")
            act = actions.get(key)
            if act is None:
                continue  # valid key that this command does not use
            try:
                val = act.type(raw) if act.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config {path}: bad value for {key}: {exc}") from None
            if act.choices is not None and val not in act.choices:
                raise UsageError(f"config {path}: {key} must be one of {list(act.choices)}")
            defaults[key] = val
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.config:
            sub = _subparser(parser, args.command)
            apply_config(sub, args.config)
            args = parser.parse_args(argv)
        result = args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"fockhankel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"fockhankel: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = result.render(args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_VIOLATED if result.violated else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
