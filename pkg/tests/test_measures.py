from __future__ import annotations

import warnings
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lipval.circle_fn import PLFunction, constant, is_symmetric, lip
from lipval.measures import (
    IntervalAlgebraElement,
    NuRecord,
    absolute_continuity_check,
    kernel_consistency_check,
    make_gab,
    nu,
    nu_additivity_check,
    nu_raw,
    nu_table,
    radon_nikodym_estimate,
    reconstruct_via_kernel,
)
from lipval.recovery import RecoverySettings, SawParams, make_saw
from lipval.sampling import random_plfunction, random_symmetric
from lipval.valuations import KernelSpec, PreconditionError, ValuationHandle, kernel_valuation

from oracles import nodes_of, sample

TENT = PLFunction.from_breakpoints([(0, 0), (F(1, 2), 1)])
ZERO = ValuationHandle(lambda f: 0.0, True, True, name="zero")
MIXED = KernelSpec.polynomial([(0, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0)])
ia = IntervalAlgebraElement.from_intervals

halves = st.integers(0, 64).map(lambda k: F(k, 128))


def kv(*terms):
    return kernel_valuation(KernelSpec.polynomial(terms))


def riemann_on(kspec, g, pieces, n=200_000):
    """Midpoint sum of ``kernel(g, |g'|)`` over a union of arcs, slopes by central differences."""
    total = 0.0
    nodes = nodes_of(g)
    for a, b in pieces:
        a, b = float(a), float(b)
        xs = a + (np.arange(n) + 0.5) * (b - a) / n
        h = 1e-9
        vals = sample(nodes, xs)
        slopes = np.abs(sample(nodes, xs + h) - sample(nodes, xs - h)) / (2 * h)
        total += (b - a) * float(np.mean(kspec(vals, slopes)))
    return total


# -- truncations and the interval algebra ---------------------------------------

def test_make_gab_examples():
    assert make_gab(TENT, 0, F(1, 2)) == TENT
    assert make_gab(TENT, F(1, 8), F(1, 8)) == constant(F(1, 4))
    h = make_gab(TENT, F(1, 8), F(1, 4))
    expected = {0: F(1, 4), F(1, 16): F(1, 4), F(3, 16): F(3, 8), F(1, 2): F(1, 2),
                F(13, 16): F(3, 8), F(15, 16): F(1, 4)}
    assert {x: h(x) for x in expected} == expected
    assert is_symmetric(h) and lip(h) == 2


def test_make_gab_rejects():
    with pytest.raises(ValueError):
        make_gab(PLFunction.from_breakpoints([(0, 0), (F(1, 3), 1)]), 0, F(1, 4))
    with pytest.raises(ValueError):
        make_gab(TENT, F(1, 4), F(1, 8))
    with pytest.raises(ValueError):
        make_gab(TENT, 0, F(3, 4))


def test_interval_algebra():
    assert ia([(F(7, 8), F(1, 8))]).pieces == ((0, F(1, 8)), (F(7, 8), 1))
    assert ia([(F(1, 4), F(3, 4))]).pieces == ((F(1, 4), F(1, 2)), (F(1, 2), F(3, 4)))
    assert ia([(0, 2)]).measure() == 1
    assert ia([(0, F(1, 4)), (F(1, 8), F(3, 8))]).measure() == F(3, 8)
    A, B = ia([(0, F(1, 4))]), ia([(F(1, 8), F(3, 4))])
    assert A.union(B).measure() + A.intersection(B).measure() == A.measure() + B.measure()
    with pytest.raises(ValueError):
        IntervalAlgebraElement(((F(1, 4), F(3, 4)),))


# -- nu ---------------------------------------------------------------------------

@given(halves, halves)
def test_nu_slope_kernel_on_tent(x, y):
    a, b = min(x, y), max(x, y)
    handle = kv((0, 1, 1.0))
    assert nu_raw(handle, TENT, a, b) == pytest.approx(4 * float(b - a), abs=1e-12)
    assert nu(handle, TENT, ia([(a, b)])) == pytest.approx(2 * float(b - a), abs=1e-12)
    assert nu(handle, TENT, ia([(1 - b, 1 - a)])) == pytest.approx(2 * float(b - a), abs=1e-12)


def test_nu_requires_null_valuation():
    with pytest.raises(PreconditionError):
        nu(kv((0, 0, 1.0)), TENT, ia([(0, F(1, 4))]))


@pytest.mark.parametrize("seed", range(4))
def test_nu_matches_riemann_oracle(seed):
    rng = np.random.default_rng(seed)
    g = random_plfunction(rng, max_nodes=10)
    handle = kernel_valuation(MIXED)
    for A in (ia([(F(1, 8), F(3, 8))]), ia([(F(5, 8), F(15, 16))]), ia([(F(7, 8), F(1, 4))])):
        assert nu(handle, g, A) == pytest.approx(riemann_on(MIXED, g, A.pieces), abs=2e-4)


@pytest.mark.parametrize("seed", range(4))
def test_nu_full_circle_is_value(seed):
    g = random_plfunction(np.random.default_rng(seed), max_nodes=10)
    handle = kernel_valuation(MIXED)
    assert nu(handle, g, IntervalAlgebraElement.full()) == pytest.approx(handle(g), abs=1e-9)


@given(halves, halves, halves, st.integers(0, 3))
def test_nu_additive_in_each_half(x, y, z, seed):
    a, b, c = sorted((x, y, z))
    g = random_plfunction(np.random.default_rng(seed), max_nodes=8)
    handle = kernel_valuation(MIXED)
    assert nu_additivity_check(handle, g, triples=[(a, b, c), (1 - c + F(0), 1 - b, 1 - a)]) <= 1e-10


@given(st.lists(st.tuples(st.integers(0, 15), st.integers(1, 8)), min_size=1, max_size=3),
       st.lists(st.tuples(st.integers(0, 15), st.integers(1, 8)), min_size=1, max_size=3))
def test_nu_modular(xs, ys):
    A = ia([(F(a, 16), F(a + w, 16)) for a, w in xs])
    B = ia([(F(a, 16), F(a + w, 16)) for a, w in ys])
    g = random_symmetric(np.random.default_rng(1))
    assert nu_additivity_check(kernel_valuation(MIXED), g, pairs=[(A, B)]) <= 1e-10


def test_nu_table_and_cache():
    handle = kv((0, 1, 1.0))
    rows = nu_table(handle, TENT, [(0, F(1, 4)), (F(1, 2), F(3, 4))])
    assert [r["h1_length"] for r in rows] == [F(1, 4), F(1, 4)]
    assert all(r["ratio"] == pytest.approx(2.0) for r in rows)
    rec = NuRecord(handle, TENT)
    rec(ia([(0, F(1, 4))]))
    rec(ia([(0, F(1, 4))]))
    assert len(rec.cache) == 1


# -- derivatives ------------------------------------------------------------------

@pytest.mark.parametrize("t", [F(1, 7), F(1, 3), F(5, 8) + F(1, 1000)])
def test_derivative_examples(t):
    g = PLFunction.from_breakpoints([(0, 0), (F(1, 4), 1), (F(1, 2), F(1, 2)), (F(3, 4), F(1, 4))])
    slope = abs(float(g(t + F(1, 10 ** 6)) - g(t)) * 10 ** 6)
    assert radon_nikodym_estimate(kv((0, 1, 1.0)), g, t).value == pytest.approx(slope, abs=1e-9)
    assert radon_nikodym_estimate(ZERO, g, t).value == 0.0
    step = kernel_valuation(KernelSpec.step_slope(F(-1)))
    assert radon_nikodym_estimate(step, g, t).value == pytest.approx(slope, abs=1e-9)


def test_derivative_rejects_breakpoint():
    with pytest.raises(ValueError, match="breakpoint"):
        radon_nikodym_estimate(kv((0, 1, 1.0)), TENT, F(1, 2))


def test_derivative_extrapolation_beats_raw():
    g = random_symmetric(np.random.default_rng(3))
    handle = kernel_valuation(MIXED)
    t = F(1, 256) * 37
    truth = riemann_on(MIXED, g, [(t - F(1, 10 ** 6), t + F(1, 10 ** 6))], n=64) / 2e-6
    d = radon_nikodym_estimate(handle, g, t)
    assert abs(d.value - truth) <= abs(d.raw_last - truth) + 1e-12
    assert abs(d.value - truth) <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_kernel_consistency(seed):
    rng = np.random.default_rng(seed)
    g = random_symmetric(rng)
    pts = [F(2 * k + 1, 256) for k in rng.integers(0, 128, size=4)]
    assert kernel_consistency_check(kernel_valuation(MIXED), g, pts) <= 1e-5


# -- reconstruction ---------------------------------------------------------------

def test_reconstruct_constant():
    rep = reconstruct_via_kernel(kernel_valuation(MIXED), constant(3))
    assert rep.reconstructed == 0.0 and rep.direct == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_reconstruct_random(seed):
    g = random_plfunction(np.random.default_rng(seed), max_nodes=8)
    handle = kernel_valuation(MIXED)
    rep = reconstruct_via_kernel(handle, g)
    assert rep.residual <= 1e-6 and not rep.oscillation
    trap = reconstruct_via_kernel(handle, g, rule="trapezoid")
    assert trap.residual >= rep.residual


def test_reconstruct_saw_input():
    g = make_saw(SawParams(F(1, 2), 2, 3))
    rep = reconstruct_via_kernel(kernel_valuation(MIXED), g)
    assert rep.residual <= 1e-6


def test_reconstruct_warns_on_oscillation():
    step = kernel_valuation(KernelSpec.step_slope(F(1, 2) + F(1, 1024)))
    g = PLFunction.from_breakpoints([(0, 0), (F(1, 2), 1)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = reconstruct_via_kernel(step, g, settings=RecoverySettings(schedule=(8, 16, 32, 64)),
                                     n_lambda=5)
    assert rep.oscillation
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_reconstruct_rejects_bad_args():
    with pytest.raises(ValueError):
        reconstruct_via_kernel(ZERO, TENT, rule="midpoint")
    with pytest.raises(ValueError):
        reconstruct_via_kernel(ZERO, TENT, n_lambda=2)


# -- absolute continuity ----------------------------------------------------------

def test_absolute_continuity():
    handle = kv((0, 1, 1.0), (1, 1, 0.5))
    rep = absolute_continuity_check(handle, TENT, [[(0, F(1, 4))], [(F(3, 8), F(5, 8))],
                                              [(0, F(1, 64)), (F(1, 2), F(9, 16))]])
    assert rep.all_hold and rep.c_g > 0
    assert len(rep.theta_grid) == 15
    zero = absolute_continuity_check(ZERO, TENT, [[(0, F(1, 2))]])
    assert zero.c_g == 0.0 and zero.rows[0].bound == 1.0
