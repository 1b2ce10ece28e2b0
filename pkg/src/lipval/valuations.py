"""Kernel valuations, flat/slope decomposition and valuation-axiom checkers."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import partial
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np

from .circle_fn import (
    TWO_PI,
    PLFunction,
    as_fraction,
    constant,
    d_tau,
    join_all,
    lattice,
    lip,
    meet_all,
    reflect,
    rotate,
)
from .quadrature import adaptive_gauss_legendre

SLOPE_UNITS = ("per_turn", "per_radian")


class KernelDomainError(ValueError):
    """Kernel evaluated outside the region where it is defined."""


class PreconditionError(ValueError):
    """A valuation handle lacks a flag required by the requested operation."""


# ---------------------------------------------------------------------------
# Kernels


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel ``kernel(level, slope)``.

    ``gamma`` is the absolute slope in the unit given by ``slope_unit``.  The
    ``function`` kind wraps an arbitrary vectorized callable; it is used for
    derived kernels and is not serializable.
    """

    kind: str
    slope_unit: str = "per_turn"
    coeffs: tuple = ()
    threshold: Optional[Fraction] = None
    lambda_grid: tuple = ()
    gamma_grid: tuple = ()
    values: tuple = ()
    func: Optional[Callable] = field(default=None, compare=False)
    flat_null: bool = False

    def __post_init__(self):
        if self.slope_unit not in SLOPE_UNITS:
            raise ValueError(f"slope_unit must be one of {SLOPE_UNITS}")
        if self.kind == "tabulated":
            lg, gg = np.asarray(self.lambda_grid), np.asarray(self.gamma_grid)
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != (len(lg), len(gg)):
                raise ValueError("tabulated values must have shape (len(lambda_grid), len(gamma_grid))")
            if np.any(np.diff(lg) <= 0) or np.any(np.diff(gg) <= 0):
                raise ValueError("tabulated grids must be strictly increasing")
            if len(lg) < 2 or len(gg) < 2:
                raise ValueError("tabulated grids need at least two points per axis")
            if gg[0] < 0:
                raise ValueError("gamma grid must be non-negative")

    # -- constructors -------------------------------------------------------
    @classmethod
    def polynomial(cls, coeffs, slope_unit: str = "per_turn") -> "KernelSpec":
        """``sum c * lambda**i * gamma**j`` over ``(i, j, c)`` triples."""
        terms = []
        for i, j, c in coeffs:
            if int(i) != i or int(j) != j or i < 0 or j < 0:
                raise ValueError(f"exponents must be non-negative integers, got {(i, j)}")
            if c != 0:
                terms.append((int(i), int(j), float(c)))
        return cls("polynomial", slope_unit, coeffs=tuple(terms))

    @classmethod
    def step_slope(cls, threshold, slope_unit: str = "per_turn") -> "KernelSpec":
        """``gamma * [lambda >= threshold]``."""
        return cls("step_slope", slope_unit, threshold=as_fraction(threshold))

    @classmethod
    def tabulated(cls, lambda_grid, gamma_grid, values, slope_unit: str = "per_turn") -> "KernelSpec":
        return cls("tabulated", slope_unit, lambda_grid=tuple(map(float, lambda_grid)),
                   gamma_grid=tuple(map(float, gamma_grid)),
                   values=tuple(tuple(map(float, row)) for row in values))

    @classmethod
    def from_function(cls, func, slope_unit: str = "per_turn", flat_null: bool = False) -> "KernelSpec":
        return cls("function", slope_unit, func=func, flat_null=flat_null)

    # -- evaluation ---------------------------------------------------------
    def __call__(self, lam, gamma):
        lam = np.asarray(lam, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        if self.kind == "polynomial":
            out = np.zeros(np.broadcast(lam, gamma).shape)
            for i, j, c in self.coeffs:
                out = out + c * lam ** i * gamma ** j
            return out
        if self.kind == "step_slope":
            return gamma * (lam >= float(self.threshold))
        if self.kind == "tabulated":
            return self._bilinear(lam, gamma)
        return np.asarray(self.func(lam, gamma), dtype=float)

    def at_turn_slope(self, lam, sigma):
        """The kernel with the slope given per turn, converted to the declared unit."""
        sigma = np.asarray(sigma, dtype=float)
        return self(lam, sigma / TWO_PI if self.slope_unit == "per_radian" else sigma)

    def _bilinear(self, lam, gamma):
        lg, gg = np.asarray(self.lambda_grid), np.asarray(self.gamma_grid)
        lam, gamma = np.broadcast_arrays(lam, gamma)
        eps = 1e-12
        if (np.any(lam < lg[0] - eps) or np.any(lam > lg[-1] + eps)
                or np.any(gamma < gg[0] - eps) or np.any(gamma > gg[-1] + eps)):
            raise KernelDomainError("tabulated kernel evaluated outside its grid")
        vals = np.asarray(self.values)
        i = np.clip(np.searchsorted(lg, lam, side="right") - 1, 0, len(lg) - 2)
        j = np.clip(np.searchsorted(gg, gamma, side="right") - 1, 0, len(gg) - 2)
        tx = np.clip((lam - lg[i]) / (lg[i + 1] - lg[i]), 0.0, 1.0)
        ty = np.clip((gamma - gg[j]) / (gg[j + 1] - gg[j]), 0.0, 1.0)
        return ((1 - tx) * (1 - ty) * vals[i, j] + tx * (1 - ty) * vals[i + 1, j]
                + (1 - tx) * ty * vals[i, j + 1] + tx * ty * vals[i + 1, j + 1])

    # -- structure ----------------------------------------------------------
    @property
    def degree(self) -> tuple[int, int]:
        """Degree bounds ``(in lambda, in gamma)`` of a polynomial kernel."""
        if self.kind != "polynomial":
            raise ValueError("degree is defined for polynomial kernels only")
        return (max((i for i, _, _ in self.coeffs), default=0),
                max((j for _, j, _ in self.coeffs), default=0))

    @property
    def vanishes_on_constants(self) -> bool:
        """Whether the kernel vanishes at slope 0 for every level."""
        if self.kind == "polynomial":
            return all(j > 0 for _, j, _ in self.coeffs)
        if self.kind == "step_slope":
            return True
        if self.kind == "tabulated":
            return self.gamma_grid[0] == 0 and all(row[0] == 0 for row in self.values)
        return self.flat_null

    def flat(self) -> "KernelSpec":
        """The kernel ``(level, slope) -> kernel(level, 0)``."""
        if self.kind == "polynomial":
            return KernelSpec.polynomial([t for t in self.coeffs if t[1] == 0], self.slope_unit)
        if self.kind == "step_slope":
            return KernelSpec.polynomial([], self.slope_unit)
        return KernelSpec.from_function(
            lambda lam, gamma, _k=self: _k(lam, np.zeros_like(np.asarray(gamma, dtype=float))),
            self.slope_unit)

    def slope_part(self) -> "KernelSpec":
        """The kernel ``kernel(level, slope) - kernel(level, 0)``."""
        if self.kind == "polynomial":
            return KernelSpec.polynomial([t for t in self.coeffs if t[1] > 0], self.slope_unit)
        if self.kind == "step_slope":
            return self
        return KernelSpec.from_function(
            lambda lam, gamma, _k=self: _k(lam, gamma) - _k(lam, np.zeros_like(np.asarray(gamma, dtype=float))),
            self.slope_unit, flat_null=True)


# ---------------------------------------------------------------------------
# Kernel valuations


def _poly_integral(kspec: KernelSpec, f: PLFunction) -> float:
    _, length, v0, v1, slope = f.float_segments()
    gamma = np.abs(slope)
    if kspec.slope_unit == "per_radian":
        gamma = gamma / TWO_PI
    total = 0.0
    means: dict[int, np.ndarray] = {}
    for i, j, c in kspec.coeffs:
        if i not in means:
            # mean of lambda**i over a linear piece from v0 to v1
            acc = np.zeros_like(v0)
            for k in range(i + 1):
                acc = acc + v0 ** k * v1 ** (i - k)
            means[i] = acc / (i + 1)
        total += c * float(np.sum(length * means[i] * gamma ** j))
    return total


def _step_integral(kspec: KernelSpec, f: PLFunction) -> float:
    thr = kspec.threshold
    acc = Fraction(0)
    for a, b, c, d in f.segments():
        if c == d:
            continue
        acc += abs(d - c) / (b - a) * _ge_measure(a, b, c, d, thr)
    out = float(acc)
    return out / TWO_PI if kspec.slope_unit == "per_radian" else out


def _ge_measure(a, b, c, d, thr) -> Fraction:
    t = min(max((thr - c) / (d - c), Fraction(0)), Fraction(1))
    return (b - a) * ((1 - t) if d > c else t)


def _quad_integral(kspec: KernelSpec, f: PLFunction, tol: float) -> tuple[float, float]:
    segs = list(f.segments())
    total, err = 0.0, 0.0
    share = tol / max(len(segs), 1)
    for a, b, c, d in segs:
        slope = (d - c) / (b - a)
        gamma = abs(float(slope))
        if kspec.slope_unit == "per_radian":
            gamma /= TWO_PI
        cuts = [Fraction(0), Fraction(1)]
        if kspec.kind == "tabulated" and c != d:
            # split where lambda crosses grid lines: the integrand is smooth in between
            for x in kspec.lambda_grid:
                t = (as_fraction(x) - c) / (d - c)
                if 0 < t < 1:
                    cuts.append(t)
        cuts = sorted(set(cuts))
        fc, fd, fa, fl = float(c), float(d), float(a), float(b - a)
        for t0, t1 in zip(cuts, cuts[1:]):
            def integrand(s, _c=fc, _d=fd, _g=gamma):
                return kspec(_c + (_d - _c) * s, np.full_like(s, _g))
            val, e = adaptive_gauss_legendre(integrand, float(t0), float(t1), share / fl if fl else share)
            total += fl * val
            err += fl * e
    return total, err


def eval_kernel_valuation(kspec: KernelSpec, f: PLFunction, tol: float = 1e-10, with_error: bool = False):
    """``integral kernel(f, |f'|) dH^1`` over the circle.

    Polynomial kernels are integrated in closed form and step kernels by
    exact threshold splitting; other kernels use adaptive Gauss-Legendre
    quadrature on each linear piece.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if kspec.kind == "polynomial":
        val, err = _poly_integral(kspec, f), 0.0
    elif kspec.kind == "step_slope":
        val, err = _step_integral(kspec, f), 0.0
    else:
        val, err = _quad_integral(kspec, f, tol)
    return (val, err) if with_error else val


@dataclass(frozen=True)
class ValuationHandle:
    """Black-box valuation together with the flags that gate its use."""

    evaluator: Callable[[PLFunction], float]
    rotation_invariant: bool = False
    vanishes_on_constants: bool = False
    provenance: str = "external"
    kernel: Optional[KernelSpec] = None
    name: str = ""

    def __call__(self, f: PLFunction) -> float:
        return float(self.evaluator(f))

    def require(self, *flags: str, op: str = "operation") -> None:
        missing = [fl for fl in flags if not getattr(self, fl)]
        if missing:
            raise PreconditionError(f"{op} requires a handle with {', '.join(missing)}")


def kernel_valuation(kspec: KernelSpec, tol: float = 1e-10, name: str = "") -> ValuationHandle:
    return ValuationHandle(
        partial(eval_kernel_valuation, kspec, tol=tol),
        rotation_invariant=True,
        vanishes_on_constants=kspec.vanishes_on_constants,
        provenance="kernel",
        kernel=kspec,
        name=name or f"kernel[{kspec.kind}]",
    )


def opaque(handle: ValuationHandle) -> ValuationHandle:
    """Same evaluator and flags, with the kernel hidden from consumers."""
    return replace(handle, provenance="external", kernel=None, name=handle.name or "opaque")


def translate_valuation(handle: ValuationHandle, lam) -> ValuationHandle:
    """``shifted(f) = handle(f + lam) - handle(lam)``."""
    lam = as_fraction(lam)
    base = handle(constant(lam))
    return ValuationHandle(
        lambda f: handle(f + lam) - base,
        rotation_invariant=handle.rotation_invariant,
        vanishes_on_constants=handle.vanishes_on_constants,
        provenance="derived",
        name=f"{handle.name}_shift({lam})",
    )


@dataclass(frozen=True)
class FlatSettings:
    """Sampling of ``eta(lam) = handle(lam)`` for black-box handles."""

    n_grid: int = 512
    lam_range: Optional[tuple] = None


def _pl_antiderivative(grid: np.ndarray, eta: np.ndarray):
    h = np.diff(grid)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (eta[1:] + eta[:-1]))])

    def prim(x):
        k = int(np.clip(np.searchsorted(grid, x, side="right") - 1, 0, len(grid) - 2))
        u = x - grid[k]
        return cum[k] + eta[k] * u + 0.5 * (eta[k + 1] - eta[k]) / h[k] * u * u

    return prim


def _flat_blackbox(handle: ValuationHandle, settings: FlatSettings, f: PLFunction) -> float:
    lo, hi = min(f.v), max(f.v)
    if settings.lam_range is not None:
        lo = min(lo, as_fraction(settings.lam_range[0]))
        hi = max(hi, as_fraction(settings.lam_range[1]))
    if lo == hi:
        return handle(constant(lo))
    n = max(settings.n_grid, 2)
    grid_q = [lo + (hi - lo) * k / (n - 1) for k in range(n)]
    grid = np.array([float(x) for x in grid_q])
    eta = np.array([handle(constant(x)) for x in grid_q])
    prim = _pl_antiderivative(grid, eta)
    total = 0.0
    for a, b, c, d in f.segments():
        length = float(b - a)
        if c == d:
            total += length * float(np.interp(float(c), grid, eta))
        else:
            total += length * (prim(float(d)) - prim(float(c))) / float(d - c)
    return total


def flat_component(handle: ValuationHandle, settings: FlatSettings = FlatSettings()) -> ValuationHandle:
    """``flat(f) = integral handle(f(t)) dH^1(t)``."""
    if handle.kernel is not None:
        return replace(kernel_valuation(handle.kernel.flat()), name=f"{handle.name}_flat")
    return ValuationHandle(
        partial(_flat_blackbox, handle, settings),
        rotation_invariant=True,
        vanishes_on_constants=False,
        provenance="derived",
        name=f"{handle.name}_flat",
    )


def slope_component(handle: ValuationHandle, settings: FlatSettings = FlatSettings()) -> ValuationHandle:
    """``handle - flat_component(handle)``; null on constants."""
    if handle.kernel is not None:
        return replace(kernel_valuation(handle.kernel.slope_part()), name=f"{handle.name}_slope")
    if handle.vanishes_on_constants:
        return handle
    flat = flat_component(handle, settings)
    return ValuationHandle(
        lambda f: handle(f) - flat(f),
        rotation_invariant=handle.rotation_invariant,
        vanishes_on_constants=True,
        provenance="derived",
        name=f"{handle.name}_slope",
    )


# ---------------------------------------------------------------------------
# Checkers


def check_valuation_identity(handle, f: PLFunction, g: PLFunction) -> float:
    """``|h(f v g) + h(f ^ g) - h(f) - h(g)|`` for the handle ``h``."""
    hi, lo = lattice(f, g)
    return abs(handle(hi) + handle(lo) - handle(f) - handle(g))


def check_inclusion_exclusion(handle, fs: Sequence[PLFunction]) -> float:
    """Residual of inclusion-exclusion for the join of ``fs``."""
    if len(fs) < 2:
        raise ValueError("inclusion-exclusion needs at least two functions")
    rhs = 0.0
    for r in range(1, len(fs) + 1):
        sign = 1.0 if r % 2 else -1.0
        for sub in combinations(fs, r):
            rhs += sign * handle(meet_all(sub))
    return abs(handle(join_all(fs)) - rhs)


def rotation(theta) -> Callable[[PLFunction], PLFunction]:
    return partial(rotate, theta=as_fraction(theta))


def reflection() -> Callable[[PLFunction], PLFunction]:
    return reflect


def check_invariance(handle, f: PLFunction, transforms) -> float:
    """Largest ``|h(t f) - h(f)|`` over the given transforms ``t``."""
    ref = handle(f)
    return max((abs(handle(t(f)) - ref) for t in transforms), default=0.0)


@dataclass
class TauProbeReport:
    values: list
    deviations: list
    d_tau_to_limit: list
    lip_bound: Fraction
    bounded: bool
    consecutive_d_tau: list
    consecutive_delta_v: list


def tau_continuity_probe(handle, sequence: Sequence[PLFunction], limit: PLFunction,
                         lip_bound=None) -> TauProbeReport:
    """Trace of the handle along a sequence approaching ``limit``.

    Reports the uniform Lipschitz bound of the sequence; when ``lip_bound``
    is given and exceeded, ``bounded`` is False but the probe still runs.
    Consecutive-pair distances and value jumps are included so that
    interleaved sequences can be inspected for non-uniform continuity.
    """
    ref = handle(limit)
    values = [handle(f) for f in sequence]
    C = max((lip(f) for f in sequence), default=Fraction(0))
    bounded = lip_bound is None or C <= as_fraction(lip_bound)
    return TauProbeReport(
        values=values,
        deviations=[abs(v - ref) for v in values],
        d_tau_to_limit=[d_tau(f, limit) for f in sequence],
        lip_bound=C,
        bounded=bounded,
        consecutive_d_tau=[d_tau(a, b) for a, b in zip(sequence, sequence[1:])],
        consecutive_delta_v=[abs(x - y) for x, y in zip(values, values[1:])],
    )


@dataclass
class UniformProbeReport:
    worst_delta_v: float
    worst_d_tau: Fraction
    worst_pair: tuple
    modulus: float
    pairs_tried: int
    seed: int
    trace: list = field(repr=False, default_factory=list)


def _dyadic(rng, lo: Fraction, hi: Fraction, denom: int) -> Fraction:
    a, b = int(np.ceil(lo * denom)), int(np.floor(hi * denom))
    return Fraction(int(rng.integers(a, b + 1)), denom)


def uniform_continuity_probe(handle, M, budget: int = 200, seed: int = 0, delta=None,
                             max_teeth: int = 64) -> UniformProbeReport:
    """Random search for close pairs (in ``d_tau``) with a large jump in value.

    Candidates have norm at most ``M`` and come from three families: shifted
    saw pairs on dyadic levels, constant shifts of random PL functions, and
    small bumps added to random PL functions.  The worst pair maximizes
    ``|h(f) - h(g)|`` among pairs with ``d_tau <= delta`` (all pairs when
    ``delta`` is None); ``modulus`` is the largest observed ratio.
    """
    from .recovery import make_hat, make_saw, SawParams, HatParams
    from .sampling import random_plfunction

    if M <= 0:
        raise ValueError("M must be positive")
    M = as_fraction(M)
    rng = np.random.default_rng(seed)
    teeth = [2 ** k for k in range(int(np.log2(max_teeth)) + 1)]
    trace = []
    for k in range(budget):
        family = k % 3
        if family == 0:
            m = int(rng.choice(teeth))
            sigma = _dyadic(rng, Fraction(1, 4), M, 4) or Fraction(1, 4)
            a = sigma / (4 * m)
            # coarse denominators are favoured so integer levels come up often
            denom = 2 ** int(rng.integers(0, 4))
            lam = _dyadic(rng, -M + 2 * a, M - 2 * a, denom) if M > 2 * a + 1 else Fraction(0)
            f = make_saw(SawParams(lam + a, sigma, m))
            g = make_saw(SawParams(lam - a, sigma, m))
        elif family == 1:
            f = random_plfunction(rng, max_nodes=8, value_bound=M / 2, slope_bound=M)
            g = f + Fraction(int(rng.integers(1, 9)), 64) * M / 2
        else:
            f = random_plfunction(rng, max_nodes=8, value_bound=M / 2, slope_bound=M / 2)
            d = Fraction(1, 2 ** int(rng.integers(3, 7)))
            bump = make_hat(HatParams(M / 2, d, Fraction(0), Fraction(int(rng.integers(0, 64)), 64)))
            g = f + bump
        dist = d_tau(f, g)
        if dist == 0:
            continue
        dv = abs(handle(f) - handle(g))
        trace.append((dist, dv, f, g))
    eligible = [t for t in trace if delta is None or t[0] <= as_fraction(delta)]
    worst = max(eligible, key=lambda t: (t[1], -t[0]), default=None)
    modulus = max((t[1] / float(t[0]) for t in trace), default=0.0)
    if worst is None:
        return UniformProbeReport(0.0, Fraction(0), (), modulus, len(trace), seed, trace)
    return UniformProbeReport(worst[1], worst[0], (worst[2], worst[3]), modulus, len(trace), seed, trace)
