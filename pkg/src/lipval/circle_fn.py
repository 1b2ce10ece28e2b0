"""Exact piecewise-linear functions on the circle.

The circle is parametrized by the turn coordinate ``s`` in ``[0, 1)`` (radian
angle ``t = 2*pi*s``) and carries the arc-length measure normalized to total
mass 1.  All geometry is done with :class:`fractions.Fraction`, so lattice
operations, norms, level sets and the ``d_tau`` metric are exact.  Slopes are
stored per turn; divide by ``2*pi`` to get the per-radian value.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from numbers import Rational
from typing import Iterable, Sequence, Union

import numpy as np

RationalLike = Union[Rational, int, str]

ONE = Fraction(1)
HALF = Fraction(1, 2)
TWO_PI = 2.0 * np.pi


class LipschitzInfeasibleError(ValueError):
    """Extension data cannot be extended with the requested Lipschitz constant."""


class ClampInfeasibleError(ValueError):
    """Clamp bounds are inconsistent with each other or with the data."""


def as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


def turn_distance(p: Fraction, q: Fraction) -> Fraction:
    """Geodesic distance between two points of the circle, in turns."""
    d = (p - q) % 1
    return min(d, 1 - d)


def per_radian(slope_per_turn) -> float:
    return float(slope_per_turn) / TWO_PI


# ---------------------------------------------------------------------------
# Arcs


@dataclass(frozen=True)
class Arc:
    """Half-open arc ``(a, b]`` traversed counter-clockwise; ``a == b`` is the full circle."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", as_fraction(self.a) % 1)
        object.__setattr__(self, "b", as_fraction(self.b) % 1)

    @classmethod
    def full(cls) -> "Arc":
        return cls(Fraction(0), Fraction(0))

    @classmethod
    def from_length(cls, a: RationalLike, length: RationalLike) -> "Arc":
        length = as_fraction(length)
        if not 0 < length <= 1:
            raise ValueError(f"arc length must lie in (0, 1], got {length}")
        return cls(as_fraction(a), as_fraction(a) + length)

    @property
    def length(self) -> Fraction:
        return (self.b - self.a) % 1 or ONE

    @property
    def is_full(self) -> bool:
        return self.a == self.b

    def contains(self, s: RationalLike) -> bool:
        if self.is_full:
            return True
        off = (as_fraction(s) - self.a) % 1
        return 0 < off <= self.length

    def pieces(self) -> list[tuple[Fraction, Fraction]]:
        """The arc as one or two intervals of ``[0, 1]``."""
        end = self.a + self.length
        if end <= 1:
            return [(self.a, end)]
        return [(self.a, ONE), (Fraction(0), end - 1)]

    def __repr__(self):
        return f"Arc({self.a}, {self.b})" if not self.is_full else "Arc(full)"


def _merge(pieces: Iterable[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    out: list[list[Fraction]] = []
    for lo, hi in sorted(p for p in pieces if p[1] > p[0]):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(lo, hi) for lo, hi in out]


def _intersect(p, q):
    out, i, j = [], 0, 0
    while i < len(p) and j < len(q):
        lo, hi = max(p[i][0], q[j][0]), min(p[i][1], q[j][1])
        if lo < hi:
            out.append((lo, hi))
        if p[i][1] < q[j][1]:
            i += 1
        else:
            j += 1
    return out


def _complement(p):
    out, prev = [], Fraction(0)
    for lo, hi in p:
        if lo > prev:
            out.append((prev, lo))
        prev = hi
    if prev < 1:
        out.append((prev, ONE))
    return out


_ENDPOINTS = ("half-open", "open", "closed")


class ArcSet:
    """Finite union of disjoint arcs, stored sorted and merged.

    ``endpoints`` records how arc boundaries are to be read: ``"half-open"``
    for interval-algebra sets ``(a, b]``, ``"open"`` for outer bands and
    ``"closed"`` for supports.  Measures never depend on it.
    """

    __slots__ = ("arcs", "endpoints", "_pieces")

    def __init__(self, arcs: Iterable[Arc] = (), endpoints: str = "half-open"):
        if endpoints not in _ENDPOINTS:
            raise ValueError(f"endpoints must be one of {_ENDPOINTS}")
        pieces = [p for arc in arcs for p in arc.pieces()]
        self._init(_merge(pieces), endpoints)

    def _init(self, pieces, endpoints):
        self._pieces = tuple(pieces)
        self.endpoints = endpoints
        arcs: list[Arc] = []
        if len(pieces) == 1 and pieces[0] == (0, 1):
            arcs = [Arc.full()]
        elif pieces:
            body = list(pieces)
            wrap = None
            if len(body) > 1 and body[0][0] == 0 and body[-1][1] == 1:
                wrap = Arc(body[-1][0], body[0][1])
                body = body[1:-1]
            arcs = [Arc(lo, hi) for lo, hi in body]
            if wrap is not None:
                arcs.append(wrap)
            arcs.sort(key=lambda arc: arc.a)
        self.arcs = tuple(arcs)

    @classmethod
    def from_pieces(cls, pieces, endpoints: str = "half-open") -> "ArcSet":
        obj = cls.__new__(cls)
        obj._init(_merge((as_fraction(lo), as_fraction(hi)) for lo, hi in pieces), endpoints)
        return obj

    @classmethod
    def empty(cls, endpoints: str = "half-open") -> "ArcSet":
        return cls((), endpoints)

    @classmethod
    def full(cls, endpoints: str = "half-open") -> "ArcSet":
        return cls([Arc.full()], endpoints)

    @property
    def pieces(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return self._pieces

    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self._pieces), Fraction(0))

    def is_empty(self) -> bool:
        return not self._pieces

    def __len__(self):
        return len(self.arcs)

    def __iter__(self):
        return iter(self.arcs)

    def __eq__(self, other):
        return isinstance(other, ArcSet) and self._pieces == other._pieces

    def __hash__(self):
        return hash(self._pieces)

    def __repr__(self):
        return f"ArcSet({list(self.arcs)!r}, endpoints={self.endpoints!r})"

    def union(self, other: "ArcSet") -> "ArcSet":
        return ArcSet.from_pieces(self._pieces + other._pieces, self.endpoints)

    def intersection(self, other: "ArcSet") -> "ArcSet":
        return ArcSet.from_pieces(_intersect(self._pieces, other._pieces), self.endpoints)

    def difference(self, other: "ArcSet") -> "ArcSet":
        return ArcSet.from_pieces(
            _intersect(self._pieces, _complement(other._pieces)), self.endpoints
        )

    def complement(self) -> "ArcSet":
        flipped = {"open": "closed", "closed": "open"}.get(self.endpoints, self.endpoints)
        return ArcSet.from_pieces(_complement(self._pieces), flipped)

    def contains(self, s: RationalLike) -> bool:
        s = as_fraction(s) % 1
        for arc in self.arcs:
            if arc.is_full:
                return True
            off = (s - arc.a) % 1
            if 0 < off < arc.length:
                return True
            if off == 0 and self.endpoints == "closed":
                return True
            if off == arc.length and self.endpoints in ("closed", "half-open"):
                return True
        return False

    __contains__ = contains


# ---------------------------------------------------------------------------
# Piecewise-linear functions


def _canonical(s: Sequence[Fraction], v: Sequence[Fraction]):
    n = len(s)
    if n == 1:
        return (Fraction(0),), (v[0],)
    ds = [s[i + 1] - s[i] for i in range(n - 1)] + [s[0] + 1 - s[-1]]
    dv = [v[i + 1] - v[i] for i in range(n - 1)] + [v[0] - v[-1]]
    keep = [dv[i - 1] * ds[i] != dv[i] * ds[i - 1] for i in range(n)]
    if not any(keep):
        return (Fraction(0),), (v[0],)
    return (
        tuple(x for x, k in zip(s, keep) if k),
        tuple(y for y, k in zip(v, keep) if k),
    )


class PLFunction:
    """Continuous piecewise-linear function on the circle with exact rational nodes.

    Nodes are kept in canonical form: abscissae strictly increasing in
    ``[0, 1)``, no removable (collinear) node, and constants stored as the
    single node ``(0, c)``.  Two functions are equal iff their canonical
    nodes coincide.
    """

    __slots__ = ("s", "v", "_float")

    def __init__(self, s: Sequence[Fraction], v: Sequence[Fraction]):
        # trusted constructor: callers guarantee canonical sorted nodes
        self.s = tuple(s)
        self.v = tuple(v)
        self._float = None

    # -- construction -------------------------------------------------------
    @classmethod
    def from_breakpoints(cls, nodes: Iterable[tuple[RationalLike, RationalLike]]) -> "PLFunction":
        pairs = [(as_fraction(x), as_fraction(y)) for x, y in nodes]
        if not pairs:
            raise ValueError("a piecewise-linear function needs at least one node")
        for i, (x, _) in enumerate(pairs):
            if not 0 <= x < 1:
                raise ValueError(f"node {i}: abscissa {x} outside [0, 1)")
        pairs.sort(key=lambda p: p[0])
        for i in range(1, len(pairs)):
            if pairs[i][0] == pairs[i - 1][0]:
                raise ValueError(f"duplicate abscissa {pairs[i][0]}")
        s, v = _canonical([p[0] for p in pairs], [p[1] for p in pairs])
        return cls(s, v)

    @classmethod
    def _raw(cls, s, v) -> "PLFunction":
        """Canonicalize already sorted, distinct nodes."""
        return cls(*_canonical(s, v))

    @classmethod
    def constant(cls, c: RationalLike) -> "PLFunction":
        return cls((Fraction(0),), (as_fraction(c),))

    # -- basic protocol -----------------------------------------------------
    @property
    def nodes(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return tuple(zip(self.s, self.v))

    def __len__(self):
        return len(self.s)

    def __eq__(self, other):
        return isinstance(other, PLFunction) and self.s == other.s and self.v == other.v

    def __hash__(self):
        return hash((self.s, self.v))

    def __repr__(self):
        body = ", ".join(f"({x}, {y})" for x, y in zip(self.s, self.v))
        return f"PLFunction([{body}])"

    def is_constant(self) -> bool:
        return len(self.s) == 1

    def __call__(self, s: RationalLike) -> Fraction:
        return evaluate(self, s)

    def __add__(self, other):
        if isinstance(other, PLFunction):
            return _pointwise(self, other, lambda a, b: a + b)
        return affine(self, 1, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PLFunction):
            return _pointwise(self, other, lambda a, b: a - b)
        return affine(self, 1, -as_fraction(other))

    def __neg__(self):
        return affine(self, -1, 0)

    def __mul__(self, k):
        return affine(self, k, 0)

    __rmul__ = __mul__

    def __or__(self, other):
        return lattice(self, other)[0]

    def __and__(self, other):
        return lattice(self, other)[1]

    # -- internals ----------------------------------------------------------
    def _values_at_sorted(self, xs: Sequence[Fraction]) -> list[Fraction]:
        """Values at sorted abscissae in ``[0, 1)`` via a single sweep."""
        s, v, n = self.s, self.v, len(self.s)
        if n == 1:
            return [v[0]] * len(xs)
        out, i = [], 0
        first, last = s[0], s[-1]
        wrap_len = first + 1 - last
        for x in xs:
            if x < first or x >= last:
                off = (x - last) % 1
                out.append(v[-1] + (v[0] - v[-1]) * off / wrap_len)
                continue
            while s[i + 1] <= x:
                i += 1
            if x == s[i]:
                out.append(v[i])
            else:
                out.append(v[i] + (v[i + 1] - v[i]) * (x - s[i]) / (s[i + 1] - s[i]))
        return out

    def segments(self):
        """Yield ``(s0, s1, v0, v1)`` for every linear piece; ``s1`` may exceed 1."""
        s, v, n = self.s, self.v, len(self.s)
        if n == 1:
            yield s[0], s[0] + 1, v[0], v[0]
            return
        for i in range(n - 1):
            yield s[i], s[i + 1], v[i], v[i + 1]
        yield s[-1], s[0] + 1, v[-1], v[0]

    def float_segments(self):
        """Cached float arrays ``(start, length, v0, v1, slope_per_turn)``."""
        if self._float is None:
            s = np.array([float(x) for x in self.s])
            v = np.array([float(y) for y in self.v])
            if len(s) == 1:
                self._float = (s, np.ones(1), v, v.copy(), np.zeros(1))
            else:
                # lengths and slopes from exact differences, not rounded nodes
                lengths = np.array([float(b - a) for a, b, _, _ in self.segments()])
                slopes = np.array([float((d - c) / (b - a)) for a, b, c, d in self.segments()])
                self._float = (s, lengths, v, np.roll(v, -1), slopes)
        return self._float


def from_breakpoints(nodes) -> PLFunction:
    return PLFunction.from_breakpoints(nodes)


def constant(c: RationalLike) -> PLFunction:
    return PLFunction.constant(c)


def evaluate(f: PLFunction, s: RationalLike) -> Fraction:
    """Exact value of ``f`` at ``s`` (reduced mod 1)."""
    x = as_fraction(s) % 1
    if len(f.s) == 1:
        return f.v[0]
    i = bisect.bisect_right(f.s, x) - 1
    if i >= 0 and f.s[i] == x:
        return f.v[i]
    return f._values_at_sorted([x])[0]


def derivative_segments(f: PLFunction) -> list[tuple[Arc, Fraction]]:
    """Arcs partitioning the circle with the per-turn slope of ``f`` on each."""
    if f.is_constant():
        return [(Arc.full(), Fraction(0))]
    return [(Arc(a, b), (d - c) / (b - a)) for a, b, c, d in f.segments()]


def _pointwise(f: PLFunction, g: PLFunction, op) -> PLFunction:
    xs = sorted(set(f.s) | set(g.s))
    fv, gv = f._values_at_sorted(xs), g._values_at_sorted(xs)
    return PLFunction._raw(xs, [op(a, b) for a, b in zip(fv, gv)])


def lattice(f: PLFunction, g: PLFunction) -> tuple[PLFunction, PLFunction]:
    """Exact pointwise maximum and minimum ``(f v g, f ^ g)``."""
    if f == g:
        return f, f
    xs = sorted(set(f.s) | set(g.s))
    fv, gv = f._values_at_sorted(xs), g._values_at_sorted(xs)
    n = len(xs)
    out_s, hi, lo = [], [], []
    wrapped = None
    for i in range(n):
        x0, a0, b0 = xs[i], fv[i], gv[i]
        out_s.append(x0)
        hi.append(max(a0, b0))
        lo.append(min(a0, b0))
        j = (i + 1) % n
        x1 = xs[j] if j else xs[0] + 1
        d0, d1 = a0 - b0, fv[j] - gv[j]
        if (d0 > 0 > d1) or (d0 < 0 < d1):
            t = d0 / (d0 - d1)
            xc = x0 + t * (x1 - x0)
            yc = a0 + t * (fv[j] - a0)
            if xc >= 1:
                wrapped = (xc - 1, yc)
            else:
                out_s.append(xc)
                hi.append(yc)
                lo.append(yc)
    if wrapped is not None:
        out_s.insert(0, wrapped[0])
        hi.insert(0, wrapped[1])
        lo.insert(0, wrapped[1])
    return PLFunction._raw(out_s, hi), PLFunction._raw(out_s, lo)


def join(f: PLFunction, g: PLFunction) -> PLFunction:
    return lattice(f, g)[0]


def meet(f: PLFunction, g: PLFunction) -> PLFunction:
    return lattice(f, g)[1]


def join_all(fs: Iterable[PLFunction]) -> PLFunction:
    it = iter(fs)
    out = next(it)
    for f in it:
        out = join(out, f)
    return out


def meet_all(fs: Iterable[PLFunction]) -> PLFunction:
    it = iter(fs)
    out = next(it)
    for f in it:
        out = meet(out, f)
    return out


def positive_part(f: PLFunction) -> PLFunction:
    return join(f, constant(0))


def negative_part(f: PLFunction) -> PLFunction:
    return meet(f, constant(0))


def affine(f: PLFunction, a: RationalLike, c: RationalLike) -> PLFunction:
    """``a*f + c``."""
    a, c = as_fraction(a), as_fraction(c)
    if a == 0:
        return constant(c)
    return PLFunction(f.s, tuple(a * y + c for y in f.v))


def rotate(f: PLFunction, theta: RationalLike) -> PLFunction:
    """``s -> f(s - theta)``; ``theta`` in turns."""
    theta = as_fraction(theta) % 1
    if f.is_constant() or theta == 0:
        return f
    pairs = sorted(((x + theta) % 1, y) for x, y in zip(f.s, f.v))
    return PLFunction(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def reflect(f: PLFunction) -> PLFunction:
    """``s -> f(1 - s)``."""
    if f.is_constant():
        return f
    pairs = sorted(((1 - x) % 1, y) for x, y in zip(f.s, f.v))
    return PLFunction(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def is_symmetric(f: PLFunction) -> bool:
    """Symmetric about ``s = 1/2`` (equivalently about ``s = 0``)."""
    return reflect(f) == f


def sup_norm(f: PLFunction) -> Fraction:
    return max(abs(y) for y in f.v)


def lip(f: PLFunction) -> Fraction:
    """Lipschitz constant per turn, for the geodesic metric."""
    return max(abs(d - c) / (b - a) for a, b, c, d in f.segments())


def norms(f: PLFunction) -> tuple[Fraction, Fraction]:
    """``(sup norm, Lipschitz constant per turn)``."""
    return sup_norm(f), lip(f)


def lip_norm(f: PLFunction) -> Fraction:
    return max(norms(f))


def total_variation(f: PLFunction) -> Fraction:
    """``integral |f'| dH^1`` with per-turn slopes and unit total mass."""
    return sum((abs(d - c) for _, _, c, d in f.segments()), Fraction(0))


def d_tau(f: PLFunction, g: PLFunction) -> Fraction:
    """``||f - g||_inf + integral |f' - g'|``, exact."""
    h = f - g
    return sup_norm(h) + total_variation(h)


def _segment_level(a, b, c, d, relation, level) -> Fraction:
    """Measure of ``{relation level}`` on one linear piece from value c to d."""
    length = b - a
    if c == d:
        hit = {"ge": c >= level, "le": c <= level, "eq": c == level}[relation]
        return length if hit else Fraction(0)
    if relation == "eq":
        return Fraction(0)
    t = min(max((level - c) / (d - c), Fraction(0)), ONE)
    rising = d > c
    if (relation == "ge") == rising:
        return length * (1 - t)
    return length * t


_REL = {">=": "ge", "ge": "ge", "<=": "le", "le": "le", "=": "eq", "==": "eq", "eq": "eq"}


def level_measure(f: PLFunction, relation: str, c: RationalLike) -> Fraction:
    """Exact ``H^1`` measure of ``{f >= c}``, ``{f <= c}`` or ``{f = c}``."""
    rel = _REL[relation]
    c = as_fraction(c)
    return sum(
        (_segment_level(a, b, v0, v1, rel, c) for a, b, v0, v1 in f.segments()),
        Fraction(0),
    )


def level_set_slopes(f: PLFunction, c: RationalLike) -> list[Fraction]:
    """Slopes of the pieces on which ``{f = c}`` has positive measure."""
    c = as_fraction(c)
    return [(d - v) / (b - a) for a, b, v, d in f.segments()
            if _segment_level(a, b, v, d, "eq", c) > 0]


def median(f: PLFunction) -> Fraction:
    """The unique ``m`` with ``H^1{f >= m} >= 1/2`` and ``H^1{f <= m} >= 1/2``."""
    levels = sorted(set(f.v))
    prev = None
    for c in levels:
        below_eq = level_measure(f, "le", c)
        if below_eq >= HALF:
            strictly_below = below_eq - level_measure(f, "eq", c)
            if strictly_below <= HALF:
                return c
            # distribution function is affine on (prev, c)
            g0 = level_measure(f, "le", prev)
            return prev + (c - prev) * (HALF - g0) / (strictly_below - g0)
        prev = c
    raise AssertionError("unreachable: H^1{f <= max f} = 1")


def support(f: PLFunction) -> ArcSet:
    """Closure of ``{f != 0}`` as a closed :class:`ArcSet`."""
    zero_flats = [
        (a, b) for a, b, c, d in f.segments() if c == 0 and d == 0
    ]
    if f.is_constant():
        return ArcSet.empty("closed") if f.v[0] == 0 else ArcSet.full("closed")
    interior = ArcSet([Arc(a, b) for a, b in zero_flats], "open")
    return interior.complement()


def is_supported_in(f: PLFunction, A: ArcSet) -> bool:
    """``supp f`` is contained in ``A`` (endpoint semantics of ``A`` respected)."""
    supp = support(f)
    if supp.is_empty():
        return True
    if supp.difference(A).measure() > 0:
        return False
    for arc in supp.arcs:
        if arc.is_full:
            if not any(a.is_full for a in A.arcs):
                return False
            continue
        if not (A.contains(arc.a) and A.contains(arc.b)):
            return False
        # the closed arc must not straddle a gap of A
        inner = ArcSet([arc]).intersection(A)
        if len(inner.arcs) != 1 or inner.measure() != arc.length:
            return False
    return True


def outer_band(A: ArcSet, omega: RationalLike) -> ArcSet:
    """``{t : 0 < d(t, A) < omega}`` with geodesic distance in turns."""
    omega = as_fraction(omega)
    if omega <= 0:
        raise ValueError("omega must be positive")
    if A.is_empty():
        return ArcSet.empty("open")
    grown = []
    for arc in A.arcs:
        if arc.is_full or arc.length + 2 * omega >= 1:
            grown.append(Arc.full())
        else:
            grown.append(Arc(arc.a - omega, arc.a + arc.length + omega))
    band = ArcSet(grown, "open").difference(A)
    band.endpoints = "open"
    return band


def interpolate_samples(values: Sequence[RationalLike]) -> PLFunction:
    """PL interpolant of samples taken at ``s = k/n``."""
    n = len(values)
    if n < 1:
        raise ValueError("need at least one sample")
    return PLFunction._raw([Fraction(k, n) for k in range(n)], [as_fraction(x) for x in values])


def symmetrize(f: PLFunction) -> tuple[PLFunction, PLFunction]:
    """``(f v f∘r, f ^ f∘r)`` for the reflection ``r(s) = 1 - s``."""
    return lattice(f, reflect(f))


def symmetric_extensions(g: PLFunction) -> tuple[PLFunction, PLFunction]:
    """Even extensions of ``g`` restricted to ``[0, 1/2]`` and to ``[1/2, 1]``."""
    keys = sorted({Fraction(0), HALF} | {x for x in g.s})
    vals = dict(zip(keys, g._values_at_sorted(keys)))

    def mirror(half):
        inside = [x for x in keys if (x <= HALF if half == 0 else (x >= HALF or x == 0))]
        nodes = {}
        for x in inside:
            y = vals[x]
            # position within the chosen half, measured from 0 for the first half
            u = x if half == 0 else (1 - x) % 1
            nodes[u] = y
            nodes[(1 - u) % 1] = y
        xs = sorted(nodes)
        return PLFunction._raw(xs, [nodes[x] for x in xs])

    return mirror(0), mirror(1)


def mcshane_extend(
    data: Sequence[tuple[Union[Arc, RationalLike], Union[PLFunction, RationalLike]]],
    L: RationalLike,
    clamp: tuple[PLFunction, PLFunction] | None = None,
) -> PLFunction:
    """Lipschitz extension of data given on points and closed arcs.

    The extension is the upper envelope of the cones ``v_p - L*d(., p)`` over
    the data points and arc endpoints, spliced with the data on its arcs and
    then clamped as ``(ext v lower) ^ upper``.  Raises
    :class:`LipschitzInfeasibleError` when no ``L``-Lipschitz extension exists
    and :class:`ClampInfeasibleError` when the clamp cannot be honoured.
    """
    L = as_fraction(L)
    if L < 0:
        raise ValueError("Lipschitz constant must be non-negative")
    if not data:
        raise ValueError("no data to extend")

    points: list[tuple[Fraction, Fraction]] = []
    arcs: list[tuple[Arc, PLFunction]] = []
    for dom, fn in data:
        if isinstance(dom, Arc):
            if not isinstance(fn, PLFunction):
                raise TypeError("arc data needs a PLFunction restriction")
            arcs.append((dom, fn))
            if dom.is_full:
                continue
            points.append((dom.a, evaluate(fn, dom.a)))
            points.append((dom.b, evaluate(fn, dom.b)))
        else:
            s = as_fraction(dom) % 1
            y = evaluate(fn, s) if isinstance(fn, PLFunction) else as_fraction(fn)
            points.append((s, y))

    for arc, fn in arcs:
        for seg, slope in derivative_segments(fn):
            if abs(slope) > L and ArcSet([seg]).intersection(ArcSet([arc])).measure() > 0:
                raise LipschitzInfeasibleError(
                    f"data on {arc} has slope {slope} exceeding L={L}")
    for (p, vp), (q, vq) in combinations(points, 2):
        if abs(vp - vq) > L * turn_distance(p, q):
            raise LipschitzInfeasibleError(
                f"points {p} -> {vp} and {q} -> {vq} need a slope above L={L}")

    full = [fn for arc, fn in arcs if arc.is_full]
    if full:
        ext = full[0]
    else:
        cones = [
            PLFunction._raw(*zip(*sorted([(p, vp), ((p + HALF) % 1, vp - L / 2)])))
            for p, vp in points
        ]
        ext = join_all(cones)
        if arcs:
            ext = _splice(ext, arcs)

    if clamp is None:
        return ext
    lower, upper = clamp
    if sup_norm(meet(upper - lower, constant(0))) > 0:
        raise ClampInfeasibleError("lower clamp exceeds upper clamp somewhere")
    if lip(lower) > L or lip(upper) > L:
        raise ClampInfeasibleError("clamp functions must be L-Lipschitz")
    for p, vp in points:
        if not evaluate(lower, p) <= vp <= evaluate(upper, p):
            raise ClampInfeasibleError(f"data value {vp} at {p} outside the clamp")
    for arc, fn in arcs:
        for bound, sign in ((lower, 1), (upper, -1)):
            gap = (fn - bound) * sign
            probe = sorted({x for x in gap.s if arc.contains(x)})
            if any(y < 0 for y in gap._values_at_sorted(probe)):
                raise ClampInfeasibleError(f"data on {arc} leaves the clamp")
    return meet(join(ext, lower), upper)


def _splice(base: PLFunction, arcs: Sequence[tuple[Arc, PLFunction]]) -> PLFunction:
    """``base`` outside the closed arcs, the data functions inside them."""
    nodes: dict[Fraction, Fraction] = {}
    for x, y in zip(base.s, base.v):
        if not any(arc.contains(x) or x == arc.a for arc, _ in arcs):
            nodes[x] = y
    for arc, fn in arcs:
        nodes[arc.a] = evaluate(fn, arc.a)
        nodes[arc.b] = evaluate(fn, arc.b)
        for x, y in zip(fn.s, fn.v):
            if arc.contains(x):
                nodes[x] = y
    xs = sorted(nodes)
    return PLFunction._raw(xs, [nodes[x] for x in xs])
