"""JSON forms of PL functions and kernel specs."""
from __future__ import annotations

import json
import re
from fractions import Fraction

from .circle_fn import PLFunction
from .valuations import KernelSpec

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


class ParseError(ValueError):
    pass


def parse_rational(text, where: str = "value") -> Fraction:
    if isinstance(text, bool):
        raise ParseError(f"{where}: expected a rational, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ParseError(f"{where}: rationals must be 'p/q' strings or integers, got {text!r}")
    m = _RATIONAL.match(text)
    if not m:
        raise ParseError(f"{where}: malformed rational {text!r}")
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ParseError(f"{where}: zero denominator in {text!r}")
    return Fraction(int(m.group(1)), den)


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def plfunction_to_dict(f: PLFunction) -> dict:
    return {"breakpoints": [{"s": format_rational(s), "v": format_rational(v)} for s, v in f.nodes]}


def plfunction_from_dict(data) -> PLFunction:
    if not isinstance(data, dict) or not isinstance(data.get("breakpoints"), list):
        raise ParseError("expected an object with a 'breakpoints' list")
    nodes = []
    prev = None
    for i, node in enumerate(data["breakpoints"]):
        if not isinstance(node, dict) or "s" not in node or "v" not in node:
            raise ParseError(f"node {i}: expected an object with keys 's' and 'v'")
        s = parse_rational(node["s"], f"node {i} abscissa")
        v = parse_rational(node["v"], f"node {i} value")
        if not 0 <= s < 1:
            raise ParseError(f"node {i}: abscissa {s} outside [0, 1)")
        if prev is not None and s <= prev:
            raise ParseError(f"node {i}: abscissae must be strictly increasing ({s} after {prev})")
        prev = s
        nodes.append((s, v))
    if not nodes:
        raise ParseError("at least one breakpoint is required")
    return PLFunction.from_breakpoints(nodes)


def serialize_plfunction(f: PLFunction) -> str:
    return json.dumps(plfunction_to_dict(f), separators=(",", ":"))


def parse_plfunction(text: str) -> PLFunction:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return plfunction_from_dict(data)


def _num(x, where):
    if isinstance(x, str):
        return float(parse_rational(x, where))
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    raise ParseError(f"{where}: expected a number, got {x!r}")


def kernel_from_dict(data) -> KernelSpec:
    if not isinstance(data, dict) or "type" not in data:
        raise ParseError("kernel spec must be an object with a 'type' field")
    unit = data.get("slope_unit", "per_turn")
    kind = data["type"]
    try:
        if kind == "polynomial":
            coeffs = []
            for n, term in enumerate(data.get("coeffs", [])):
                if not isinstance(term, list) or len(term) != 3:
                    raise ParseError(f"coeffs[{n}]: expected [i, j, c]")
                i, j, c = term
                coeffs.append((i, j, _num(c, f"coeffs[{n}]")))
            return KernelSpec.polynomial(coeffs, unit)
        if kind == "step_slope":
            thr = data["threshold"]
            return KernelSpec.step_slope(parse_rational(thr, "threshold") if isinstance(thr, str)
                                         else Fraction(thr), unit)
        if kind == "tabulated":
            return KernelSpec.tabulated(data["lambda_grid"], data["gamma_grid"], data["values"], unit)
    except KeyError as exc:
        raise ParseError(f"kernel spec missing field {exc}") from exc
    raise ParseError(f"unknown kernel type {kind!r}")


def kernel_to_dict(kspec: KernelSpec) -> dict:
    if kspec.kind == "polynomial":
        return {"type": "polynomial", "slope_unit": kspec.slope_unit,
                "coeffs": [[i, j, c] for i, j, c in kspec.coeffs]}
    if kspec.kind == "step_slope":
        return {"type": "step_slope", "slope_unit": kspec.slope_unit,
                "threshold": format_rational(kspec.threshold)}
    if kspec.kind == "tabulated":
        return {"type": "tabulated", "slope_unit": kspec.slope_unit,
                "lambda_grid": list(kspec.lambda_grid), "gamma_grid": list(kspec.gamma_grid),
                "values": [list(r) for r in kspec.values]}
    raise ValueError("function kernels have no JSON form")


def parse_kernel(text: str) -> KernelSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return kernel_from_dict(data)
