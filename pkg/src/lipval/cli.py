"""Command-line entry point: ``lipval <command> [options]``.

Exit codes: 0 success, 1 evaluation/parse failure or failed verification,
2 configuration error (bad flags, grids, unit mismatch, refused operation).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings
from fractions import Fraction

import numpy as np

from . import __version__
from .circle_fn import Arc, ArcSet, PLFunction, d_tau, interpolate_samples
from .measures import RECONSTRUCT_SETTINGS, nu_table, reconstruct_via_kernel
from .recovery import RecoverySettings, control_measure_estimate, recover_kernel_grid
from .serialize import (
    ParseError,
    format_rational,
    kernel_to_dict,
    parse_kernel,
    parse_plfunction,
    parse_rational,
    plfunction_to_dict,
)
from .valuations import (
    KernelDomainError,
    KernelSpec,
    PreconditionError,
    ValuationHandle,
    eval_kernel_valuation,
    kernel_valuation,
    opaque,
)
from . import verification


class ConfigError(Exception):
    """Bad command-line configuration; exit code 2."""


class Refused(Exception):
    """Operation refused for the given handle; exit code 2."""


# ---------------------------------------------------------------------------
# argument helpers


def _grid(text: str) -> list[Fraction]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be a:b:n, got {text!r}")
    try:
        a, b = parse_rational(parts[0]), parse_rational(parts[1])
        n = int(parts[2])
    except (ParseError, ValueError) as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    if n < 1:
        raise ConfigError("grid needs n >= 1")
    if n == 1:
        return [a]
    return [a + (b - a) * k / (n - 1) for k in range(n)]


def _schedule(text: str) -> tuple[int, ...]:
    try:
        sched = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad m-schedule {text!r}") from exc
    if not sched or any(m < 1 for m in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ConfigError("m-schedule must be a non-empty increasing list of positive integers")
    return sched


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lipval-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _report(args, body: dict) -> str:
    doc = {"version": __version__, "seed": args.seed, "config": _config(args), **body}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, PLFunction):
        return plfunction_to_dict(x)
    return x


def _emit(args, text: str, report: str | None = None) -> None:
    """Write ``text`` to ``--out`` (plus a JSON sidecar for CSV) or stdout."""
    if args.out:
        _write_atomic(args.out, text)
        if report is not None:
            _write_atomic(args.out + ".json", report)
    else:
        sys.stdout.write(text)


def _load_kernel(args) -> KernelSpec:
    if not args.kernel:
        raise ConfigError("--kernel is required")
    kspec = parse_kernel(_read(args.kernel))
    if args.slope_unit and args.slope_unit != kspec.slope_unit:
        raise ConfigError(f"slope unit mismatch: kernel declares {kspec.slope_unit}, "
                          f"--slope-unit says {args.slope_unit}")
    return kspec


def _load_fn(args) -> PLFunction:
    if not args.fn:
        raise ConfigError("--fn is required")
    return parse_plfunction(_read(args.fn))


def _position_weighted(f: PLFunction) -> float:
    """``integral s * f(s) ds`` on ``[0, 1)``: a valuation that is not rotation invariant."""
    total = Fraction(0)
    for a, b, c, d in f.segments():
        if b > 1:
            # wrap piece: split at 1 and shift the tail back to [0, b - 1]
            mid = c + (d - c) * (1 - a) / (b - a)
            total += _lin_moment(a, Fraction(1), c, mid) + _lin_moment(Fraction(0), b - 1, mid, d)
        else:
            total += _lin_moment(a, b, c, d)
    return float(total)


def _lin_moment(a, b, c, d) -> Fraction:
    # integral of s * (linear from c at a to d at b)
    h = b - a
    return h * (a * (2 * c + d) + b * (c + 2 * d)) / 6


BUILTINS = {
    "zero": lambda: ValuationHandle(lambda f: 0.0, True, True, "builtin", name="zero"),
    "position-weighted": lambda: ValuationHandle(_position_weighted, False, False, "builtin",
                                                 name="position-weighted"),
}


def _load_handle(args) -> ValuationHandle:
    if getattr(args, "builtin", None):
        if args.kernel:
            raise ConfigError("give either --kernel or --builtin, not both")
        if args.builtin not in BUILTINS:
            raise ConfigError(f"unknown builtin {args.builtin!r}; choose from {sorted(BUILTINS)}")
        return BUILTINS[args.builtin]()
    return opaque(kernel_valuation(_load_kernel(args)))


def _settings(args, default: RecoverySettings) -> RecoverySettings:
    sched = _schedule(args.m_schedule) if args.m_schedule else default.schedule
    tol = args.tol if args.tol is not None else default.tol
    return RecoverySettings(schedule=sched, window=default.window, tol=tol,
                            extrapolate=not args.no_extrapolate)


# ---------------------------------------------------------------------------
# commands


def cmd_eval(args) -> int:
    kspec, f = _load_kernel(args), _load_fn(args)
    value, err = eval_kernel_valuation(kspec, f, tol=args.tol or 1e-10, with_error=True)
    print(repr(value))
    if args.out:
        _write_atomic(args.out, _report(args, {"value": value, "error_estimate": err}))
    return 0


def cmd_decompose(args) -> int:
    kspec = _load_kernel(args)
    body: dict = {}
    if kspec.kind == "tabulated":
        body["flat"] = {"lambda": list(kspec.lambda_grid),
                        "eta": [row[0] if kspec.gamma_grid[0] == 0 else None for row in kspec.values]}
        body["slope"] = "tabulated kernel minus its gamma = 0 column"
    else:
        body["flat"] = kernel_to_dict(kspec.flat())
        body["slope"] = kernel_to_dict(kspec.slope_part())
    if args.lambda_grid:
        lams = _grid(args.lambda_grid)
        body["eta_samples"] = [{"lambda": lam, "eta": float(kspec.at_turn_slope(float(lam), 0.0))}
                               for lam in lams]
    text = _report(args, body)
    _emit(args, text)
    return 0


def cmd_recover(args) -> int:
    handle = _load_handle(args)
    if not handle.rotation_invariant:
        raise Refused(f"kernel recovery refused: handle {handle.name!r} is not rotation invariant")
    lams = _grid(args.lambda_grid or "-1:1:5")
    sigs = _grid(args.sigma_grid or "0:2:5")
    if any(s < 0 for s in sigs):
        raise ConfigError("sigma grid must be non-negative")
    settings = _settings(args, RecoverySettings())
    rep = recover_kernel_grid(handle, lams, sigs, settings, decompose=True)
    body = {"rows": len(rep.entries), "schedule": list(settings.schedule)}
    if args.trace:
        body["trace"] = [{"lambda": e.lam, "sigma": e.sigma, "values": e.values,
                          "extrapolated": e.extrapolated} for e in rep.entries]
    _emit(args, rep.to_csv(), _report(args, body))
    return 0


def cmd_nu_table(args) -> int:
    handle = _load_handle(args)
    g = _load_fn(args)
    n = args.partition
    if n < 1:
        raise ConfigError("--partition must be positive")
    intervals = [(Fraction(k, n), Fraction(k + 1, n)) for k in range(n)]
    rows = nu_table(handle, g, intervals)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "nu_value", "h1_length", "ratio"])
    for r in rows:
        w.writerow([format_rational(r["a"]), format_rational(r["b"]), repr(r["nu_value"]),
                    format_rational(r["h1_length"]), repr(r["ratio"])])
    _emit(args, buf.getvalue(), _report(args, {"rows": len(rows)}))
    return 0


def cmd_reconstruct(args) -> int:
    handle = _load_handle(args)
    g = _load_fn(args)
    settings = _settings(args, RECONSTRUCT_SETTINGS)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = reconstruct_via_kernel(handle, g, settings, n_lambda=args.n_lambda)
    for wmsg in caught:
        print(f"warning: {wmsg.message}", file=sys.stderr)
    body = {"direct": rep.direct, "reconstructed": rep.reconstructed, "residual": rep.residual,
            "oscillation": rep.oscillation, "segments": rep.segments}
    _emit(args, _report(args, body))
    return 0


def cmd_control(args) -> int:
    handle = _load_handle(args)
    arc = args.arc.split(":")
    if len(arc) != 2:
        raise ConfigError("--arc must be a:b")
    region = ArcSet([Arc(parse_rational(arc[0]), parse_rational(arc[1]))])
    est = control_measure_estimate(handle, parse_rational(args.lam), parse_rational(args.gamma_cap), region,
                                   teeth_budget=args.teeth_budget, trace=args.trace)
    body = {"mu_plus": est.mu_plus, "mu_minus": est.mu_minus, "theta": est.theta,
            "per_l": [{"l": l, "sup_plus": p, "sup_minus": m} for l, p, m in est.per_l]}
    if args.trace:
        body["trace"] = est.trace
    _emit(args, _report(args, body))
    return 0


def cmd_verify(args) -> int:
    flat = _load_kernel(args) if args.kernel else None
    only = set(args.only.split(",")) if args.only else None
    if only and not only <= set(verification.CHECKS):
        raise ConfigError(f"unknown checks: {sorted(only - set(verification.CHECKS))}")
    results = verification.run_all(args.seed, only=only, flat_kernel=flat)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failing checks: " + ", ".join(failed))
    if args.out:
        _write_atomic(args.out, _report(args, {"passed": not failed, "failed": failed,
                                                "checks": [r.to_dict() for r in results]}))
    return 1 if failed else 0


def cmd_approx(args) -> int:
    if not args.samples:
        raise ConfigError("--samples is required")
    with open(args.samples, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "value" not in reader.fieldnames:
            raise ParseError("samples CSV needs a 'value' column")
        values = []
        for i, row in enumerate(reader):
            try:
                values.append(Fraction(row["value"].strip()))
            except (ValueError, ZeroDivisionError) as exc:
                raise ParseError(f"row {i}: bad sample {row['value']!r}") from exc
    f = interpolate_samples(values)
    if args.fn:
        ref = _load_fn(args)
        print(f"d_tau to reference: {float(d_tau(f, ref))!r}", file=sys.stderr)
    _emit(args, json.dumps(plfunction_to_dict(f), separators=(",", ":")) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", help="kernel spec JSON")
    common.add_argument("--fn", help="PL function JSON")
    common.add_argument("--lambda-grid", help="a:b:n")
    common.add_argument("--sigma-grid", help="a:b:n (per-turn slopes)")
    common.add_argument("--m-schedule", help="comma-separated increasing tooth counts")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (written atomically)")
    common.add_argument("--trace", action="store_true")
    common.add_argument("--slope-unit", choices=("per_turn", "per_radian"),
                        help="expected slope unit of the kernel; a mismatch is an error")

    p = _Parser(prog="lipval", description="Valuations on Lipschitz functions on the circle.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eval", parents=[common], help="evaluate a kernel valuation")
    s.set_defaults(func=cmd_eval)
    s = sub.add_parser("decompose", parents=[common], help="flat and slope parts of a kernel")
    s.set_defaults(func=cmd_decompose)
    s = sub.add_parser("recover", parents=[common], help="recover the kernel from saw functions")
    s.add_argument("--builtin", help=f"built-in valuation instead of --kernel ({', '.join(BUILTINS)})")
    s.add_argument("--no-extrapolate", action="store_true")
    s.set_defaults(func=cmd_recover)
    s = sub.add_parser("nu-table", parents=[common], help="nu_g on a uniform partition")
    s.add_argument("--builtin")
    s.add_argument("--partition", type=int, default=8)
    s.set_defaults(func=cmd_nu_table)
    s = sub.add_parser("reconstruct", parents=[common], help="rebuild a valuation from its recovered kernel")
    s.add_argument("--builtin")
    s.add_argument("--no-extrapolate", action="store_true")
    s.add_argument("--n-lambda", type=int, default=33)
    s.set_defaults(func=cmd_reconstruct)
    s = sub.add_parser("control", parents=[common], help="control-measure estimate on one arc")
    s.add_argument("--builtin")
    s.add_argument("--lam", default="0")
    s.add_argument("--gamma-cap", default="1")
    s.add_argument("--arc", default="0:1/4")
    s.add_argument("--teeth-budget", type=int, default=64)
    s.set_defaults(func=cmd_control)
    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", help="comma-separated check names")
    s.set_defaults(func=cmd_verify)
    s = sub.add_parser("approx", parents=[common], help="PL interpolant of uniform samples")
    s.add_argument("--samples", help="CSV with a 'value' column, samples at s = k/n")
    s.set_defaults(func=cmd_approx)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.tol is not None and args.tol <= 0:
            raise ConfigError("--tol must be positive")
        return args.func(args)
    except (ConfigError, Refused) as exc:
        print(f"lipval: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"lipval: {exc}", file=sys.stderr)
        return 2
    except (ParseError, KernelDomainError, ValueError, OSError) as exc:
        print(f"lipval: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
