"""Test-function families and recovery of the pseudo kernel from a valuation.

Saw functions ``saw(lam, sigma, m)`` are ``m`` identical teeth of slope
``+-sigma`` per turn oscillating in ``[lam - sigma/(4m), lam + sigma/(4m)]``.
For a continuous kernel their values tend to ``kernel(lam, sigma)`` as ``m``
grows, which is how a black-box valuation's kernel is read off.  Hats are rise/plateau/fall
bumps, and zigzags built from hats probe the control measures.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .circle_fn import (
    Arc,
    ArcSet,
    PLFunction,
    as_fraction,
    constant,
    join_all,
    rotate,
)
from .valuations import (
    KernelSpec,
    ValuationHandle,
    flat_component,
    slope_component,
    translate_valuation,
)

DEFAULT_SCHEDULE = tuple(2 ** k for k in range(1, 9))
DEFAULT_L_SCHEDULE = (Fraction(1, 8), Fraction(1, 32), Fraction(1, 128))


@dataclass(frozen=True)
class SawParams:
    lam: Fraction
    sigma: Fraction
    m: int

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        object.__setattr__(self, "sigma", as_fraction(self.sigma))
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("tooth count m must be a positive integer")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @property
    def amplitude(self) -> Fraction:
        return self.sigma / (4 * self.m)


@dataclass(frozen=True)
class HatParams:
    sigma: Fraction
    d: Fraction
    ell: Fraction
    s0: Fraction

    def __post_init__(self):
        for name in ("sigma", "d", "ell", "s0"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not 0 < self.d <= Fraction(1, 4):
            raise ValueError(f"rise width d must lie in (0, 1/4], got {self.d}")
        if not 0 <= self.ell <= 1 - 2 * self.d:
            raise ValueError(f"plateau width must lie in [0, 1 - 2d], got {self.ell}")


def make_psi(lam, sigma) -> PLFunction:
    """Single symmetric tooth: ``lam - sigma/4`` at ``s = 0``, ``lam + sigma/4`` at ``s = 1/2``."""
    lam, sigma = as_fraction(lam), as_fraction(sigma)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return constant(lam)
    return PLFunction((Fraction(0), Fraction(1, 2)), (lam - sigma / 4, lam + sigma / 4))


def make_saw(p: SawParams) -> PLFunction:
    if p.sigma == 0:
        return constant(p.lam)
    lo, hi = p.lam - p.amplitude, p.lam + p.amplitude
    s, v = [], []
    for j in range(p.m):
        s.append(Fraction(2 * j, 2 * p.m))
        s.append(Fraction(2 * j + 1, 2 * p.m))
        v.append(lo)
        v.append(hi)
    return PLFunction(s, v)


def make_hat(p: HatParams) -> PLFunction:
    """Zero outside ``(s0, s0 + 2d + ell]``, plateau ``sigma*d`` in the middle."""
    return _trapezoid(p.sigma, p.d, p.ell, p.s0)


def _trapezoid(sigma: Fraction, d: Fraction, ell: Fraction, s0: Fraction) -> PLFunction:
    # unchecked: saw teeth with m = 1 need a rise width of 1/2
    if sigma == 0:
        return constant(0)
    top = sigma * d
    raw = [(s0, Fraction(0)), (s0 + d, top), (s0 + d + ell, top),
           (s0 + 2 * d + ell, Fraction(0))]
    nodes: dict[Fraction, Fraction] = {}
    for x, y in raw:
        nodes.setdefault(x % 1, y)
    return PLFunction.from_breakpoints(nodes.items())


def saw_teeth(p: SawParams) -> list[PLFunction]:
    """The ``m`` rotated single-tooth functions whose join is the saw."""
    base = p.lam - p.amplitude
    tooth = _trapezoid(p.sigma, Fraction(1, 2 * p.m), Fraction(0), Fraction(0)) + base
    return [rotate(tooth, Fraction(j, p.m)) for j in range(p.m)]


# ---------------------------------------------------------------------------
# Kernel recovery


@dataclass(frozen=True)
class RecoverySettings:
    """How the saw sequence is evaluated and its limit extracted.

    With ``extrapolate`` the last values are Richardson-extrapolated when the
    tail of the schedule doubles ``m`` and the successive gaps contract by a
    factor in ``[3, 5]`` (the quadratic rate of smooth kernels); otherwise
    the last value is taken as is.
    """

    schedule: tuple = DEFAULT_SCHEDULE
    window: int = 3
    tol: float = 1e-6
    extrapolate: bool = True

    def __post_init__(self):
        sched = tuple(int(m) for m in self.schedule)
        if not sched or any(m < 1 for m in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("m-schedule must be a non-empty strictly increasing list of positive ints")
        if self.tol <= 0 or self.window < 1:
            raise ValueError("tol must be positive and window at least 1")
        object.__setattr__(self, "schedule", sched)


@dataclass
class RecoveryEntry:
    lam: Fraction
    sigma: Fraction
    schedule: tuple
    values: list
    value: float
    raw_last: float
    cauchy_residual: float
    oscillation: bool
    extrapolated: bool

    @property
    def m_last(self) -> int:
        return self.schedule[-1]


def _extract(schedule, values, settings: RecoverySettings):
    used, extrapolated = list(values), False
    n = len(values)
    if settings.extrapolate and n >= 3:
        doubling = schedule[-1] == 2 * schedule[-2] and schedule[-2] == 2 * schedule[-3]
        d1, d2 = values[-2] - values[-3], values[-1] - values[-2]
        if doubling and d2 != 0 and d1 * d2 > 0 and 3 <= d1 / d2 <= 5:
            used = [values[i] + (values[i] - values[i - 1]) / 3
                    for i in range(1, n) if schedule[i] == 2 * schedule[i - 1]]
            extrapolated = True
    window = used[-settings.window:]
    gaps = [abs(b - a) for a, b in zip(window, window[1:])]
    residual = max(gaps, default=0.0)
    oscillation = (max(window) - min(window)) > 10 * settings.tol
    return used[-1], residual, oscillation, extrapolated


def recover_kernel_point(handle: ValuationHandle, lam, sigma,
                         settings: RecoverySettings = RecoverySettings()) -> RecoveryEntry:
    """Evaluate the handle on saws ``saw(lam, sigma, m)`` along the schedule."""
    handle.require("rotation_invariant", "vanishes_on_constants", op="kernel recovery")
    lam, sigma = as_fraction(lam), as_fraction(sigma)
    values = [handle(make_saw(SawParams(lam, sigma, m))) for m in settings.schedule]
    value, residual, osc, extrap = _extract(settings.schedule, values, settings)
    return RecoveryEntry(lam, sigma, settings.schedule, values, value, values[-1],
                         residual, osc, extrap)


@dataclass
class RecoveryReport:
    entries: list
    settings: RecoverySettings
    lambda_grid: tuple = ()
    sigma_grid: tuple = ()

    CSV_COLUMNS = ("lambda", "sigma", "m_last", "value", "cauchy_residual", "oscillation")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for e in self.entries:
            w.writerow([_fmt_q(e.lam), _fmt_q(e.sigma), e.m_last, repr(float(e.value)),
                        repr(float(e.cauchy_residual)), int(e.oscillation)])
        return buf.getvalue()

    def table(self) -> np.ndarray:
        """Recovered values shaped ``(len(lambda_grid), len(sigma_grid))``."""
        return np.array([e.value for e in self.entries]).reshape(len(self.lambda_grid), len(self.sigma_grid))


def _fmt_q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def recover_kernel_grid(handle: ValuationHandle, lambda_grid: Sequence, sigma_grid: Sequence,
                        settings: RecoverySettings = RecoverySettings(),
                        decompose: bool = False, map_fn=map) -> RecoveryReport:
    """Recovered kernel over the Cartesian grid, in ``lambda``-major order.

    With ``decompose`` a handle that is not null on constants is split into
    its slope part (recovered from saws) plus ``eta(lam) = handle(lam)``.
    ``map_fn`` may be a parallel map; ordering of the output is fixed.
    """
    lams = [as_fraction(x) for x in lambda_grid]
    sigs = [as_fraction(x) for x in sigma_grid]
    target, eta = handle, None
    if decompose and not handle.vanishes_on_constants:
        target = slope_component(handle)
        eta = {lam: handle(constant(lam)) for lam in lams}
    pts = [(lam, sig) for lam in lams for sig in sigs]
    entries = list(map_fn(lambda p: recover_kernel_point(target, p[0], p[1], settings), pts))
    if eta is not None:
        for e in entries:
            shift = eta[e.lam]
            e.values = [x + shift for x in e.values]
            e.value += shift
            e.raw_last += shift
    return RecoveryReport(entries, settings, tuple(lams), tuple(sigs))


# ---------------------------------------------------------------------------
# Structural checks on hats and saws


def flat_invisibility_check(W: ValuationHandle, sigma, d, ell_grid, s0_grid,
                            check_preconditions: bool = True) -> float:
    """``max |W(hat(sigma, d, ell, s0)) - W(hat(sigma, d, 0, 0))|`` over the grids."""
    if check_preconditions:
        W.require("rotation_invariant", "vanishes_on_constants", op="flat invisibility check")
    ref = W(make_hat(HatParams(sigma, d, 0, 0)))
    dev = 0.0
    for ell in ell_grid:
        for s0 in s0_grid:
            dev = max(dev, abs(W(make_hat(HatParams(sigma, d, ell, s0))) - ref))
    return dev


@dataclass
class SawDecomposition:
    pl_identity: bool
    residual: float
    direct: float
    via_teeth: float


def saw_decomposition_check(handle: ValuationHandle, p: SawParams,
                            check_preconditions: bool = True) -> SawDecomposition:
    """Saw as a join of rotated teeth, and ``handle(saw) = m * shifted(tooth)``."""
    if check_preconditions:
        handle.require("rotation_invariant", "vanishes_on_constants", op="saw decomposition check")
    saw = make_saw(p)
    identity = join_all(saw_teeth(p)) == saw
    base = p.lam - p.amplitude
    if p.sigma == 0:
        tooth_val = 0.0
    else:
        tooth = _trapezoid(p.sigma, Fraction(1, 2 * p.m), Fraction(0), Fraction(0))
        tooth_val = translate_valuation(handle, base)(tooth)
    direct = handle(saw)
    return SawDecomposition(identity, abs(direct - p.m * tooth_val), direct, p.m * tooth_val)


# ---------------------------------------------------------------------------
# Control measures


def zigzag(region: ArcSet, sigma, teeth: int, amplitude) -> PLFunction:
    """Train of triangular teeth of slope ``sigma`` inside each arc of ``region``.

    Each arc keeps a margin of ``length/(4*teeth)`` at both ends so the closed
    support stays inside the open arc; tooth heights are capped by
    ``amplitude``, leaving flat gaps between narrower teeth when needed.
    """
    sigma, amplitude = as_fraction(sigma), as_fraction(amplitude)
    if sigma == 0 or amplitude == 0 or region.is_empty():
        return constant(0)
    nodes: dict[Fraction, Fraction] = {}
    for arc in region.arcs:
        length = arc.length
        margin = length / (4 * teeth)
        width = (length - 2 * margin) / teeth
        half = min(width / 2, amplitude / sigma)
        for j in range(teeth):
            start = arc.a + margin + j * width + (width / 2 - half)
            for x, y in ((start, 0), (start + half, sigma * half), (start + 2 * half, 0)):
                nodes[x % 1] = Fraction(y)
    xs = sorted(nodes)
    return PLFunction._raw(xs, [nodes[x] for x in xs])


@dataclass
class ControlEstimate:
    lam: Fraction
    gamma_cap: Fraction
    region: ArcSet
    l_schedule: tuple
    mu_plus: float
    mu_minus: float
    theta: float
    per_l: list
    trace: Optional[list] = field(default=None, repr=False)


def control_measure_estimate(handle: ValuationHandle, lam, gamma_cap, region: ArcSet,
                             l_schedule: Sequence = DEFAULT_L_SCHEDULE, teeth_budget: int = 64,
                             sigma_points: int = 17, trace: bool = False) -> ControlEstimate:
    """Estimate ``mu+/-_{lam,gamma}(region)`` and the density ``theta(lam, gamma)``.

    For every ``l`` the supremum of the level-shifted handle and of its
    negative is taken over zigzags of both signs supported in ``region`` with slope on an even grid of ``[0, gamma_cap]``,
    tooth counts ``1, 2, 4, ...`` up to ``teeth_budget`` and height at most
    ``l``; the zero function is always a candidate.  ``mu+/-`` are read at the
    smallest ``l``.
    """
    lam, gamma_cap = as_fraction(lam), as_fraction(gamma_cap)
    if gamma_cap < 0:
        raise ValueError("gamma_cap must be non-negative")
    if region.is_empty():
        raise ValueError("region must be non-empty")
    Vl = translate_valuation(handle, lam)
    sigmas = [gamma_cap * k / (sigma_points - 1) for k in range(1, sigma_points)] if sigma_points > 1 else [gamma_cap]
    teeth = [2 ** k for k in range(int(np.log2(max(teeth_budget, 1))) + 1)]
    per_l, log = [], [] if trace else None
    for l in sorted((as_fraction(x) for x in l_schedule), reverse=True):
        sup_plus, sup_minus = 0.0, 0.0
        for sig in sigmas:
            if sig == 0:
                continue
            for k in teeth:
                z = zigzag(region, sig, k, l)
                for sign in (1, -1):
                    val = Vl(z * sign)
                    sup_plus, sup_minus = max(sup_plus, val), max(sup_minus, -val)
                    if log is not None:
                        log.append({"l": str(l), "sigma": str(sig), "teeth": k, "sign": sign, "value": val})
        per_l.append((l, sup_plus, sup_minus))
    _, mu_plus, mu_minus = per_l[-1]
    theta = (mu_plus + mu_minus) / float(region.measure())
    return ControlEstimate(lam, gamma_cap, region, tuple(p[0] for p in per_l), mu_plus, mu_minus,
                           theta, per_l, log)


def theta_oracle_for_kernel(kspec: KernelSpec, lam, gamma_cap, n_grid: int = 4097) -> float:
    """Brute-force density for a slope-type kernel: ``max kernel+ + max kernel-`` on a slope grid."""
    gamma_cap = float(gamma_cap)
    sig = np.linspace(0.0, gamma_cap, n_grid) if gamma_cap > 0 else np.zeros(1)
    vals = kspec.at_turn_slope(np.full_like(sig, float(lam)), sig)
    return float(max(0.0, vals.max()) + max(0.0, (-vals).max()))


def flat_kernel_of(handle: ValuationHandle):
    """``eta`` as a callable for handles whose flat part is needed explicitly."""
    flat = flat_component(handle)
    return lambda lam: flat(constant(lam))
