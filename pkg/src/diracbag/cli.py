"""Command-line front end.

Subcommands: ``spectrum``, ``shift``, ``sweep``, ``rearrange`` and
``polarizability``.  Shifts are printed in units of ``lambda**2 a**3``,
energies in ``1/a`` (or ``pi/a`` with ``--pi-units``).  Exit status is 0
on success, 1 on a usage error and 2 on a numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

from . import __version__
from .dalgarno_lewis import DLConsistencyError, dl_total, nonrel_shift
from .matrix_elements import Perturbation
from .perturbation import (
    PairingScheme,
    ShiftReport,
    Truncation,
    method_I_total,
    method_II_total,
    polarizability,
    rearrangement_demo,
)
from .spectrum import BagModel, BracketError, ConvergenceError, Sign, enumerate_levels

CSV_SCHEMA = "diracbag-csv/1"
METHODS = ("pauli", "free", "dalgarno-lewis", "nonrel")
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """12 significant digits; the CSV and JSON renderings share this."""
    if x is None:
        return ""
    if isinstance(x, (bool, int, str)):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _num(x):
    # JSON value with the same 12-digit rounding as the CSV text
    if isinstance(x, float):
        return None if math.isnan(x) else float(fmt(x))
    return x


@dataclass(frozen=True)
class SweepSpec:
    ma_min: float
    ma_max: float
    steps: int
    methods: tuple[str, ...] = METHODS
    trunc: Truncation = field(default_factory=Truncation)

    def __post_init__(self):
        if not (0.0 <= self.ma_min < self.ma_max):
            raise ValueError("need 0 <= ma_min < ma_max")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}" if bad else "no methods requested")

    def grid(self) -> list[float]:
        h = (self.ma_max - self.ma_min) / (self.steps - 1)
        return [self.ma_min + i * h for i in range(self.steps - 1)] + [self.ma_max]


# rendering helpers

class Table:
    def __init__(self, columns, rows, meta=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = dict(meta or {})

    def csv(self) -> str:
        out = io.StringIO()
        out.write(f"# {CSV_SCHEMA} diracbag {__version__}\n")
        for k, v in self.meta.items():
            out.write(f"# {k}={fmt(v)}\n")
        out.write(",".join(self.columns) + "\n")
        for r in self.rows:
            out.write(",".join(fmt(v) for v in r) + "\n")
        return out.getvalue()

    def json(self) -> str:
        obj = {k: _num(v) for k, v in self.meta.items()}
        obj["rows"] = [{c: _num(v) for c, v in zip(self.columns, r)} for r in self.rows]
        return json.dumps(obj, indent=2) + "\n"

    def text(self) -> str:
        cells = [self.columns] + [[fmt(v) for v in r] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = [f"{k}: {fmt(v)}" for k, v in self.meta.items()]
        for row in cells:
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        return "\n".join(lines) + "\n"

    def render(self, fmt_name: str) -> str:
        return getattr(self, fmt_name)()


def emit(text: str, out_path: str | None) -> None:
    """Write to ``out_path`` atomically, or to stdout."""
    if out_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".diracbag-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# computations

def _model(args) -> BagModel:
    return BagModel.from_ma(args.ma, args.a)


def _trunc(args) -> Truncation:
    return Truncation(n_max=args.nmax, tail_tol=args.tail_tol)


def nonrel_report(model: BagModel, pert: Perturbation) -> ShiftReport:
    """Ground-state large-mass limit packaged as a report (no sea)."""
    w = nonrel_shift(model, pert)
    return ShiftReport.build(w, 0.0, {"0++": w}, 0.0, "nonrel", {"converged": True})


def run_method(method: str, model: BagModel, pert: Perturbation, trunc: Truncation) -> ShiftReport:
    if method == "pauli":
        return method_I_total(model, pert, trunc)
    if method == "free":
        return method_II_total(model, pert, trunc)
    if method == "dalgarno-lewis":
        return dl_total(model, pert, trunc)
    if method == "nonrel":
        return nonrel_report(model, pert)
    raise ValueError(f"unknown method {method!r}")


def scaled(report: ShiftReport, model: BagModel, pert: Perturbation) -> dict:
    """Report fields in units of ``lambda**2 a**3``."""
    s = pert.lam ** 2 * model.a ** 3
    d = report.to_dict()
    for key in ("w_bound", "w_vac", "w_total", "tail_estimate"):
        d[key] = d[key] / s if s else 0.0
    d["per_level"] = {k: (v / s if s else 0.0) for k, v in d["per_level"].items()}
    return d


# subcommands

def cmd_spectrum(args) -> str:
    model = _model(args)
    sign = Sign.POSITIVE if args.sign == "positive" else Sign.NEGATIVE
    levels = enumerate_levels(model, args.count, sign)
    unit = math.pi if args.pi_units else 1.0
    suffix = "_over_pi" if args.pi_units else ""
    rows = [[lv.label, lv.k * model.a / unit, lv.eps * model.a / unit] for lv in levels]
    meta = {"command": "spectrum", "ma": model.ma, "a": model.a, "sign": args.sign}
    return Table(["label", "ka" + suffix, "eps_a" + suffix], rows, meta).render(args.format)


def cmd_shift(args) -> str:
    model = _model(args)
    pert = Perturbation(args.lam)
    report = run_method(args.method, model, pert, _trunc(args))
    d = scaled(report, model, pert)
    if args.format == "json":
        if not args.per_level:
            d.pop("per_level")
        d["units"] = "lambda^2 a^3"
        d["ma"] = model.ma
        return json.dumps(_deep_num(d), indent=2) + "\n"
    meta = {"command": "shift", "method": args.method, "ma": model.ma, "units": "lambda^2 a^3"}
    rows = [[k, d[k]] for k in ("w_bound", "w_vac", "w_total", "tail_estimate")]
    for k, v in d["diagnostics"].items():
        rows.append([k, v])
    if args.per_level:
        rows += [[f"level:{k}", v] for k, v in d["per_level"].items()]
    return Table(["quantity", "value"], rows, meta).render(args.format)


def _deep_num(obj):
    if isinstance(obj, dict):
        return {k: _deep_num(v) for k, v in obj.items()}
    return _num(obj)


def sweep_rows(spec: SweepSpec, lam: float = 1.0):
    pert = Perturbation(lam)
    rows = []
    for ma in spec.grid():
        model = BagModel.from_ma(ma)
        row = [ma]
        for method in spec.methods:
            if method == "nonrel" and ma == 0.0:
                row += [float("nan"), float("nan")]
                continue
            r = run_method(method, model, pert, spec.trunc)
            row += [r.w_total / lam ** 2 if lam else 0.0, r.tail_estimate / lam ** 2 if lam else 0.0]
        rows.append(row)
    return rows


def cmd_sweep(args) -> str:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    spec = SweepSpec(args.ma_min, args.ma_max, args.steps, methods, _trunc(args))
    columns = ["ma"]
    for m in methods:
        columns += [f"{m}_w_total", f"{m}_tail"]
    meta = {
        "command": "sweep", "ma_min": spec.ma_min, "ma_max": spec.ma_max, "steps": spec.steps,
        "methods": "+".join(methods), "n_max": spec.trunc.n_max, "tail_tol": spec.trunc.tail_tol,
        "units": "lambda^2 a^3",
    }
    return Table(columns, sweep_rows(spec, args.lam), meta).render(args.format)


def cmd_rearrange(args) -> str:
    if args.ma != 0.0:
        raise UsageError("the rearrangement demonstrator is defined for ma = 0 only")
    scheme = PairingScheme.parse(args.scheme)
    model = BagModel(0.0, args.a)
    pert = Perturbation(args.lam)
    trace = rearrangement_demo(pert, model, scheme, args.terms, _trunc(args))
    s = pert.lam ** 2 * model.a ** 3
    rows = [[i, p / s] for i, p in enumerate(trace.partial_sums)]
    meta = {"command": "rearrange", "scheme": str(scheme), "terms": args.terms,
            "limit": trace.limit / s, "tail_estimate": trace.tail_estimate / s,
            "units": "lambda^2 a^3"}
    return Table(["step", "partial_sum"], rows, meta).render(args.format)


def cmd_polarizability(args) -> str:
    if args.field is None or args.charge is None:
        raise UsageError("polarizability needs --charge and --field")
    model = _model(args)
    pert = Perturbation.from_field(args.charge, args.field)
    report = run_method(args.method, model, pert, _trunc(args))
    P = polarizability(report, pert)
    rows = [["w_total", report.w_total], ["polarizability", P],
            ["polarizability_over_q2a3", P / (args.charge ** 2 * model.a ** 3)],
            ["tail_estimate", report.tail_estimate]]
    meta = {"command": "polarizability", "method": args.method, "ma": model.ma,
            "charge": args.charge, "field": args.field}
    return Table(["quantity", "value"], rows, meta).render(args.format)


# parser

def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not (math.isfinite(v) and v > 0):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return conv


def _nonneg(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _finite(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ma", type=_nonneg, default=0.0, help="dimensionless mass m*a")
    common.add_argument("--a", type=_positive(float), default=1.0, help="bag half-width")
    common.add_argument("--lambda", dest="lam", type=_finite, default=1.0, help="coupling -qE")
    common.add_argument("--nmax", type=_positive(int), default=200)
    common.add_argument("--tail-tol", type=_positive(float), default=1e-10)
    common.add_argument("--format", choices=("csv", "json", "text"), default=None,
                        help="default: csv for sweep, text otherwise")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    p = _Parser(prog="diracbag", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"diracbag {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("spectrum", parents=[common], help="list bag levels")
    sp.add_argument("--count", type=_positive(int), default=4)
    sp.add_argument("--sign", choices=("positive", "negative"), default="positive")
    sp.add_argument("--pi-units", action="store_true", help="print ka and eps*a over pi")
    sp.set_defaults(func=cmd_spectrum)

    sh = sub.add_parser("shift", parents=[common], help="second-order shift of ground state plus sea")
    sh.add_argument("--method", choices=METHODS, default="pauli")
    sh.add_argument("--per-level", action="store_true")
    sh.set_defaults(func=cmd_shift)

    sw = sub.add_parser("sweep", parents=[common], help="total shifts over a range of ma")
    sw.add_argument("--ma-min", type=_nonneg, default=0.0)
    sw.add_argument("--ma-max", type=_nonneg, default=3.0)
    sw.add_argument("--steps", type=int, default=31)
    sw.add_argument("--methods", default=",".join(METHODS))
    sw.set_defaults(func=cmd_sweep)

    re_ = sub.add_parser("rearrange", parents=[common], help="partial sums of the sea double series")
    re_.add_argument("--scheme", default="row-pairs",
                     help="row-pairs, column-pairs, n-prime-first, n-first or diagonal-band(D)")
    re_.add_argument("--terms", type=_positive(int), default=100)
    re_.set_defaults(func=cmd_rearrange)

    po = sub.add_parser("polarizability", parents=[common], help="P = -2 W / E^2")
    po.add_argument("--method", choices=METHODS, default="pauli")
    po.add_argument("--charge", type=_finite)
    po.add_argument("--field", type=_finite)
    po.set_defaults(func=cmd_polarizability)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "text"
    try:
        text = args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"diracbag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BracketError, ConvergenceError, DLConsistencyError, ArithmeticError) as exc:
        print(f"diracbag: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        emit(text, args.out)
    except OSError as exc:
        print(f"diracbag: error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
