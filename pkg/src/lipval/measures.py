"""Interval-algebra measures ``nu_g`` attached to a valuation and a PL function.

Everything here assumes a valuation that is null on constants.  ``nu_g`` is
built from truncations ``g_ab`` of symmetric functions; for a non-symmetric
``g`` the two halves of the circle are handled through the even extensions
of ``g`` restricted to each half, and the result is halved so that the full
circle gets the value ``handle(g)`` for symmetric ``g``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson, trapezoid

from .circle_fn import (
    HALF,
    ArcSet,
    PLFunction,
    as_fraction,
    constant,
    is_symmetric,
    lip,
    sup_norm,
    symmetric_extensions,
    symmetrize,
)
from .recovery import RecoverySettings, control_measure_estimate, recover_kernel_point
from .valuations import PreconditionError, ValuationHandle

DEFAULT_EPS_SCHEDULE = (Fraction(1, 32), Fraction(1, 128), Fraction(1, 512))
RECONSTRUCT_SETTINGS = RecoverySettings(schedule=(8, 16, 32, 64))


def make_gab(g: PLFunction, a, b) -> PLFunction:
    """Truncation of a symmetric ``g``: frozen at ``g(a)`` near 0 and at ``g(b)`` near 1/2."""
    a, b = as_fraction(a), as_fraction(b)
    if not is_symmetric(g):
        raise ValueError("make_gab needs g symmetric about s = 1/2")
    if not 0 <= a <= b <= HALF:
        raise ValueError(f"need 0 <= a <= b <= 1/2, got a={a}, b={b}")
    ga, gb = g(a), g(b)
    if a == b:
        return constant(ga)
    nodes = {Fraction(0): ga, a: ga, b: gb, 1 - b: gb, (1 - a) % 1: ga}
    for x, y in g.nodes:
        if a < x < b or 1 - b < x < 1 - a:
            nodes[x] = y
    xs = sorted(nodes)
    return PLFunction._raw(xs, [nodes[x] for x in xs])


@dataclass(frozen=True)
class IntervalAlgebraElement:
    """Finite disjoint union of half-open arcs ``(a, b]``, none crossing 1/2 or 0."""

    pieces: tuple = ()

    def __post_init__(self):
        prev_hi = None
        for a, b in self.pieces:
            if not 0 <= a < b <= 1:
                raise ValueError(f"bad piece ({a}, {b}]")
            if a < HALF < b:
                raise ValueError(f"piece ({a}, {b}] crosses 1/2")
            if prev_hi is not None and a < prev_hi:
                raise ValueError("pieces must be sorted and disjoint")
            prev_hi = b

    @classmethod
    def from_intervals(cls, intervals) -> "IntervalAlgebraElement":
        """Union of ``(a, b]`` pairs taken mod 1; ``a > b`` wraps through 0."""
        raw = []
        for a, b in intervals:
            a, b = as_fraction(a), as_fraction(b)
            if a == b:
                continue
            if b - a >= 1:
                raw.append((Fraction(0), Fraction(1)))
                continue
            a, b = a % 1, b % 1 if b % 1 != 0 else Fraction(1)
            if a < b:
                raw.append((a, b))
            elif a > b:
                raw.extend([(a, Fraction(1)), (Fraction(0), b)])
        merged = ArcSet.from_pieces(raw).pieces
        out = []
        for lo, hi in merged:
            if lo < HALF < hi:
                out.extend([(lo, HALF), (HALF, hi)])
            else:
                out.append((lo, hi))
        return cls(tuple(out))

    @classmethod
    def full(cls) -> "IntervalAlgebraElement":
        return cls(((Fraction(0), HALF), (HALF, Fraction(1))))

    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.pieces), Fraction(0))

    def _arcs(self) -> ArcSet:
        return ArcSet.from_pieces(self.pieces)

    def union(self, other: "IntervalAlgebraElement") -> "IntervalAlgebraElement":
        return IntervalAlgebraElement.from_intervals(self.pieces + other.pieces)

    def intersection(self, other: "IntervalAlgebraElement") -> "IntervalAlgebraElement":
        return IntervalAlgebraElement.from_intervals(self._arcs().intersection(other._arcs()).pieces)


def _require_null(handle: ValuationHandle, op: str):
    handle.require("vanishes_on_constants", op=op)


def nu_raw(handle: ValuationHandle, g: PLFunction, a, b) -> float:
    """``handle(g_ab)`` for a symmetric ``g`` and ``(a, b]`` inside ``[0, 1/2]``."""
    _require_null(handle, "nu")
    a, b = as_fraction(a), as_fraction(b)
    if a == b:
        return 0.0
    return handle(make_gab(g, a, b))


@dataclass
class NuRecord:
    """``nu_g`` for one ``(handle, g)`` pair with cached interval values.

    The cache is filled by a single writer; values depend only on the key so
    concurrent readers see either a miss or the final value.
    """

    handle: ValuationHandle
    g: PLFunction
    g1: PLFunction = field(init=False)
    g2: PLFunction = field(init=False)
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _require_null(self.handle, "nu")
        if is_symmetric(self.g):
            self.g1 = self.g2 = self.g
        else:
            self.g1, self.g2 = symmetric_extensions(self.g)

    def raw(self, which: int, a: Fraction, b: Fraction) -> float:
        key = (which, a, b)
        if key not in self.cache:
            self.cache[key] = nu_raw(self.handle, self.g1 if which == 1 else self.g2, a, b)
        return self.cache[key]

    def __call__(self, A: IntervalAlgebraElement) -> float:
        total = 0.0
        for a, b in A.pieces:
            if b <= HALF:
                total += self.raw(1, a, b)
            else:
                total += self.raw(2, 1 - b, 1 - a)
        return 0.5 * total


def nu(handle: ValuationHandle, g: PLFunction, A: IntervalAlgebraElement) -> float:
    return NuRecord(handle, g)(A)


def nu_additivity_check(handle: ValuationHandle, g: PLFunction, triples: Sequence = (),
                        pairs: Sequence = ()) -> float:
    """Max residual of ``nu(a,b] + nu(b,c] = nu(a,c]`` and of modularity on pairs.

    ``triples`` are ``a <= b <= c`` inside one half; ``pairs`` are pairs of
    :class:`IntervalAlgebraElement`.
    """
    rec = NuRecord(handle, g)
    ia = IntervalAlgebraElement.from_intervals
    worst = 0.0
    for a, b, c in triples:
        lhs = rec(ia([(a, b)])) + rec(ia([(b, c)]))
        worst = max(worst, abs(lhs - rec(ia([(a, c)]))))
    for I, J in pairs:
        lhs = rec(I) + rec(J)
        worst = max(worst, abs(lhs - rec(I.union(J)) - rec(I.intersection(J))))
    return worst


def nu_table(handle: ValuationHandle, g: PLFunction, intervals: Sequence) -> list[dict]:
    """Rows ``a, b, nu_value, h1_length, ratio`` for single intervals ``(a, b]``."""
    rec = NuRecord(handle, g)
    rows = []
    for a, b in intervals:
        A = IntervalAlgebraElement.from_intervals([(a, b)])
        val, h1 = rec(A), A.measure()
        rows.append({"a": as_fraction(a), "b": as_fraction(b), "nu_value": val,
                     "h1_length": h1, "ratio": val / float(h1) if h1 else float("nan")})
    return rows


# ---------------------------------------------------------------------------
# Derivatives and kernel consistency


@dataclass
class DerivativeEstimate:
    t: Fraction
    value: float
    raw_last: float
    cauchy_residual: float
    extrapolated: bool
    trace: list


def _segment_at(g: PLFunction, t: Fraction) -> tuple[Fraction, Fraction, Fraction]:
    """``(start, end, slope)`` of the linear piece whose interior holds ``t``.

    ``start`` may be negative and ``end`` may exceed 1 so that the piece is an
    ordinary interval around ``t``.
    """
    if len(g.s) > 1 and t % 1 in g.s:
        raise ValueError(f"t = {t} is a breakpoint of g; the derivative is undefined there")
    if g.is_constant():
        return t - 1, t + 1, Fraction(0)
    for a, b, c, d in g.segments():
        for shift in (0, 1, -1):
            if a < t + shift < b:
                return a - shift, b - shift, (d - c) / (b - a)
    raise AssertionError("unreachable: every non-node point lies inside a piece")


def _slope_at(g: PLFunction, t: Fraction) -> Fraction:
    return _segment_at(g, t)[2]


def radon_nikodym_estimate(handle: ValuationHandle, g: PLFunction, t,
                           eps_schedule: Sequence = DEFAULT_EPS_SCHEDULE,
                           record: Optional[NuRecord] = None,
                           extrapolate: bool = True, max_refine: int = 4) -> DerivativeEstimate:
    """``nu((t-eps, t+eps]) / (2 eps)`` along a shrinking schedule.

    Once a window lies inside the linear piece through ``t`` the ratio equals
    the kernel averaged over a symmetric range of levels, whose error is even
    in ``eps``.  With ``extrapolate`` the schedule is extended geometrically
    (at most ``max_refine`` steps) until its two smallest windows lie inside
    that piece, and those two are combined to cancel the ``eps**2`` term.
    """
    t = as_fraction(t) % 1
    lo, hi, _ = _segment_at(g, t)
    rec = record if record is not None else NuRecord(handle, g)
    eps = [as_fraction(e) for e in eps_schedule]
    if extrapolate and len(eps) >= 2:
        # refine until the two smallest windows both sit inside the piece
        for _ in range(max_refine):
            if all(lo <= t - e and t + e <= hi for e in eps[-2:]):
                break
            eps.append(eps[-1] * (eps[-1] / eps[-2]))
    trace, inside = [], []
    for e in eps:
        A = IntervalAlgebraElement.from_intervals([(t - e, t + e)])
        trace.append(rec(A) / float(A.measure()))
        inside.append(lo <= t - e and t + e <= hi and 2 * e < 1)
    residual = max((abs(y - x) for x, y in zip(trace, trace[1:])), default=0.0)
    value, extrapolated = trace[-1], False
    if extrapolate and len(trace) >= 2 and inside[-1] and inside[-2]:
        r = float((eps[-1] / eps[-2]) ** 2)
        value = trace[-1] + (trace[-1] - trace[-2]) * r / (1 - r)
        extrapolated = True
    return DerivativeEstimate(t, value, trace[-1], residual, extrapolated, trace)


def kernel_consistency_check(handle: ValuationHandle, g: PLFunction, points: Sequence,
                             settings: RecoverySettings = RecoverySettings(),
                             eps_schedule: Sequence = DEFAULT_EPS_SCHEDULE) -> float:
    """Max gap between the density at ``t`` and the saw-recovered kernel at ``(g(t), |g'(t)|)``."""
    handle.require("rotation_invariant", "vanishes_on_constants", op="kernel consistency check")
    rec = NuRecord(handle, g)
    worst = 0.0
    for t in points:
        t = as_fraction(t) % 1
        sigma = abs(_slope_at(g, t))
        d = radon_nikodym_estimate(handle, g, t, eps_schedule, record=rec).value
        k = recover_kernel_point(handle, g(t), sigma, settings).value
        worst = max(worst, abs(d - k))
    return worst


# ---------------------------------------------------------------------------
# Reconstruction


@dataclass
class ReconstructionReport:
    reconstructed: float
    direct: float
    residual: float
    oscillation: bool
    segments: list


def reconstruct_via_kernel(handle: ValuationHandle, g: PLFunction,
                           settings: RecoverySettings = RECONSTRUCT_SETTINGS,
                           n_lambda: int = 33, rule: str = "simpson") -> ReconstructionReport:
    """Rebuild ``handle(g)`` as ``integral kernel(g, |g'|)`` from a recovered kernel.

    ``g`` is replaced by its symmetrizations ``g v g~`` and ``g ^ g~``; on
    each linear piece the recovered kernel is sampled at ``n_lambda`` levels
    and integrated in ``lambda`` with Simpson's rule (or the trapezoid rule).
    """
    handle.require("rotation_invariant", "vanishes_on_constants", op="reconstruction")
    if rule not in ("simpson", "trapezoid"):
        raise ValueError("rule must be 'simpson' or 'trapezoid'")
    if n_lambda < 3:
        raise ValueError("n_lambda must be at least 3")
    direct = handle(g)
    if g.is_constant():
        return ReconstructionReport(0.0, direct, abs(direct), False, [])
    cache: dict = {}
    osc = False

    def kspec(lam: Fraction, sigma: Fraction) -> float:
        nonlocal osc
        key = (lam, sigma)
        if key not in cache:
            entry = recover_kernel_point(handle, lam, sigma, settings)
            osc = osc or entry.oscillation
            cache[key] = entry.value
        return cache[key]

    integrate = simpson if rule == "simpson" else trapezoid
    segments, total = [], 0.0
    for label, h in zip(("upper", "lower"), symmetrize(g)):
        for a, b, c, d in h.segments():
            length = b - a
            sigma = abs(d - c) / length
            if c == d:
                lams = [c]
                kv = [kspec(c, sigma)]
                piece = float(length) * kv[0]
            else:
                lams = [c + (d - c) * k / (n_lambda - 1) for k in range(n_lambda)]
                kv = [kspec(lam, sigma) for lam in lams]
                piece = float(length) * float(integrate(np.array(kv), dx=1.0 / (n_lambda - 1)))
            total += 0.5 * piece
            segments.append({"part": label, "a": a, "b": b, "sigma": sigma,
                             "lambdas": lams, "kernel": kv, "integral": piece})
    if osc:
        warnings.warn("oscillating saw sequence during kernel recovery; residual may be unreliable",
                      RuntimeWarning, stacklevel=2)
    return ReconstructionReport(total, direct, abs(total - direct), osc, segments)


# ---------------------------------------------------------------------------
# Absolute continuity


@dataclass
class AbsContRow:
    element: IntervalAlgebraElement
    nu_value: float
    h1: Fraction
    bound: float
    holds: bool


@dataclass
class AbsContReport:
    c_g: float
    theta_grid: list
    rows: list

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self.rows)


def absolute_continuity_check(handle: ValuationHandle, g: PLFunction, intervals: Sequence,
                              theta_grid: tuple = (5, 3), region: Optional[ArcSet] = None,
                              teeth_budget: int = 32, sigma_points: int = 9) -> AbsContReport:
    """Check ``|nu(A)| <= 2 (C_g + 1) H^1(A)`` with ``C_g`` a grid maximum of theta.

    ``theta_grid = (n_lambda, n_gamma)`` spaces ``lambda`` evenly over
    ``[-|g|_inf, |g|_inf]`` and ``gamma`` over ``[0, L(g)]``.
    """
    _require_null(handle, "absolute continuity check")
    n_lam, n_gam = theta_grid
    bound_l, bound_g = sup_norm(g), lip(g)
    region = region if region is not None else ArcSet.from_pieces([(0, HALF)])
    lams = [-bound_l + 2 * bound_l * k / max(n_lam - 1, 1) for k in range(n_lam)] if bound_l else [Fraction(0)]
    gams = [bound_g * k / max(n_gam - 1, 1) for k in range(n_gam)]
    grid, c_g = [], 0.0
    for lam in lams:
        for gam in gams:
            th = 0.0 if gam == 0 else control_measure_estimate(
                handle, lam, gam, region, teeth_budget=teeth_budget, sigma_points=sigma_points).theta
            grid.append((lam, gam, th))
            c_g = max(c_g, th)
    rec = NuRecord(handle, g)
    rows = []
    for A in intervals:
        if not isinstance(A, IntervalAlgebraElement):
            A = IntervalAlgebraElement.from_intervals(A)
        val, h1 = rec(A), A.measure()
        bound = 2 * (c_g + 1) * float(h1)
        rows.append(AbsContRow(A, val, h1, bound, abs(val) <= bound + 1e-12))
    return AbsContReport(c_g, grid, rows)


__all__ = [
    "make_gab", "IntervalAlgebraElement", "NuRecord", "nu_raw", "nu", "nu_additivity_check",
    "nu_table", "DerivativeEstimate", "radon_nikodym_estimate", "kernel_consistency_check",
    "ReconstructionReport", "reconstruct_via_kernel", "AbsContReport", "absolute_continuity_check",
    "PreconditionError",
]
