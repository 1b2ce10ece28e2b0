from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import pl_functions, unit_points
from lipval.circle_fn import constant, from_breakpoints, join, lip, meet, rotate, symmetrize
from lipval.recovery import HatParams, SawParams, make_hat, make_saw
from lipval.valuations import (
    KernelDomainError,
    KernelSpec,
    PreconditionError,
    ValuationHandle,
    check_inclusion_exclusion,
    check_invariance,
    check_valuation_identity,
    eval_kernel_valuation,
    flat_component,
    kernel_valuation,
    opaque,
    reflection,
    rotation,
    slope_component,
    tau_continuity_probe,
    translate_valuation,
    uniform_continuity_probe,
)
from lipval.circle_fn import interpolate_samples
from oracles import nodes_of, riemann_kernel

TENT = from_breakpoints([(0, 0), (F(1, 2), 1)])
PEAK = from_breakpoints([(0, 0), (F(1, 4), 1), (F(1, 2), 0)])


def poly(*terms, unit="per_turn"):
    return KernelSpec.polynomial(terms, unit)


# -- evaluation ----------------------------------------------------------------

@given(pl_functions())
def test_unit_kernel_is_total_mass(f):
    assert eval_kernel_valuation(poly((0, 0, 1.0)), f) == pytest.approx(1.0, abs=1e-14)


def test_level_kernel_on_constant():
    assert eval_kernel_valuation(poly((1, 0, 1.0)), constant(F(7, 3))) == pytest.approx(7 / 3)


def test_lambda_gamma_on_tent():
    kspec = poly((1, 1, 1.0))
    assert eval_kernel_valuation(kspec, TENT) == pytest.approx(1.0, abs=1e-14)
    assert riemann_kernel(kspec, nodes_of(TENT)) == pytest.approx(1.0, abs=1e-6)


@given(pl_functions(max_nodes=8))
def test_polynomial_against_riemann_sum(f):
    kspec = poly((0, 0, 0.3), (2, 1, 1.0), (1, 2, -0.5), (3, 0, 0.25))
    # cells aligned with the 1/128 node grid keep every kink on a cell boundary
    assert eval_kernel_valuation(kspec, f) == pytest.approx(
        riemann_kernel(kspec, nodes_of(f), n=128 * 2000), rel=1e-6, abs=1e-6)


def test_per_radian_unit_divides_slope():
    per_turn = poly((0, 1, 1.0))
    per_radian = poly((0, 1, 1.0), unit="per_radian")
    assert eval_kernel_valuation(per_radian, TENT) == pytest.approx(eval_kernel_valuation(per_turn, TENT) / (2 * np.pi))


@given(pl_functions(max_nodes=8), st.fractions(-2, 2, max_denominator=8))
def test_step_kernel_against_counting(f, thr):
    kspec = KernelSpec.step_slope(thr)
    exact = eval_kernel_valuation(kspec, f)
    n = 128 * 3125
    # only cells where a piece crosses the threshold can be off, each by at most slope / n
    bound = float(lip(f)) * len(f.nodes) / n + 1e-12
    assert exact == pytest.approx(riemann_kernel(kspec, nodes_of(f), n=n), abs=bound)


def test_step_kernel_exact_at_threshold():
    handle = kernel_valuation(KernelSpec.step_slope(1))
    assert handle(make_saw(SawParams(1, 2, 5))) == 1.0


@given(pl_functions(max_nodes=6))
def test_tabulated_matches_polynomial_on_bilinear(f):
    # lambda * gamma is reproduced exactly by bilinear interpolation
    lam = np.linspace(-5, 5, 11)
    # values in [-4, 4] on a 1/128 grid allow slopes up to 1024
    gam = np.linspace(0, 1024, 5)
    table = KernelSpec.tabulated(lam, gam, np.outer(lam, gam))
    expected = eval_kernel_valuation(poly((1, 1, 1.0)), f)
    assert eval_kernel_valuation(table, f) == pytest.approx(expected, rel=1e-10, abs=1e-8)


def test_tabulated_nonlinear_quadrature():
    lam = np.linspace(-2, 2, 9)
    gam = np.array([0.0, 4.0])
    vals = np.array([[x ** 2, x ** 2 + 1] for x in lam])
    kspec = KernelSpec.tabulated(lam, gam, vals)
    f = from_breakpoints([(0, F(-1)), (F(1, 2), F(1))])
    assert eval_kernel_valuation(kspec, f) == pytest.approx(riemann_kernel(kspec, nodes_of(f)), abs=1e-6)


def test_tabulated_out_of_range():
    kspec = KernelSpec.tabulated([0, 1], [0, 1], [[0, 0], [1, 1]])
    with pytest.raises(KernelDomainError):
        eval_kernel_valuation(kspec, constant(2))


def test_function_kernel():
    kspec = KernelSpec.from_function(lambda lam, g: np.cos(lam) * g)
    assert eval_kernel_valuation(kspec, TENT) == pytest.approx(riemann_kernel(kspec, nodes_of(TENT)), abs=1e-6)


def test_bad_kernels():
    with pytest.raises(ValueError):
        poly((-1, 0, 1.0))
    with pytest.raises(ValueError):
        KernelSpec.tabulated([1, 0], [0, 1], [[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        KernelSpec("polynomial", "per_degree")
    with pytest.raises(ValueError):
        eval_kernel_valuation(poly((0, 0, 1.0)), TENT, tol=0)


def test_kernel_flags():
    assert poly((1, 1, 1.0)).vanishes_on_constants
    assert not poly((1, 0, 1.0), (0, 1, 1.0)).vanishes_on_constants
    assert KernelSpec.step_slope(0).vanishes_on_constants
    assert poly((2, 1, 1.0), (1, 3, 1.0)).degree == (2, 3)
    handle = kernel_valuation(poly((1, 0, 1.0)))
    assert handle.rotation_invariant and not handle.vanishes_on_constants and handle.provenance == "kernel"


# -- translation and decomposition -----------------------------------------------

def test_translate_examples():
    handle = kernel_valuation(poly((0, 1, 1.0)))
    assert translate_valuation(handle, 0)(TENT) == handle(TENT)
    assert translate_valuation(handle, F(3, 2))(constant(0)) == 0.0


@given(pl_functions(max_nodes=8), st.fractions(-2, 2, max_denominator=8))
def test_translate_square_kernel(f, c):
    handle = kernel_valuation(poly((2, 0, 1.0)))
    direct = eval_kernel_valuation(poly((2, 0, 1.0), (1, 0, 2 * float(c))), f)
    assert translate_valuation(handle, c)(f) == pytest.approx(direct, abs=1e-10)


@given(pl_functions(max_nodes=6), st.fractions(-1, 1, max_denominator=4), st.fractions(-1, 1, max_denominator=4))
def test_translate_composition(f, a, b):
    handle = kernel_valuation(poly((2, 1, 1.0), (1, 0, 1.0)))
    twice = translate_valuation(translate_valuation(handle, a), b)
    assert twice(f) == pytest.approx(translate_valuation(handle, a + b)(f), abs=1e-10)


def test_flat_component_examples():
    V0 = kernel_valuation(poly((0, 1, 1.0)))
    assert flat_component(V0)(TENT) == 0.0
    handle = kernel_valuation(poly((2, 0, 1.0), (1, 1, 1.0)))
    assert flat_component(handle)(TENT) == pytest.approx(1 / 3)


def test_flat_component_blackbox_and_idempotence():
    handle = opaque(kernel_valuation(poly((2, 0, 1.0), (1, 1, 1.0))))
    flat = flat_component(handle)
    assert flat(TENT) == pytest.approx(1 / 3, abs=1e-6)
    assert flat_component(flat)(PEAK) == pytest.approx(flat(PEAK), abs=1e-6)


@given(pl_functions(max_nodes=8))
def test_flat_plus_slope_is_whole(f):
    handle = opaque(kernel_valuation(poly((2, 0, 1.0), (1, 1, 1.0), (0, 0, 0.5))))
    total = flat_component(handle)(f) + slope_component(handle)(f)
    assert total == pytest.approx(handle(f), abs=1e-9)


@given(pl_functions(max_nodes=8))
def test_slope_component_agrees_with_slope_kernel(f):
    handle = opaque(kernel_valuation(poly((2, 0, 1.0), (1, 1, 1.0))))
    expected = eval_kernel_valuation(poly((1, 1, 1.0)), f)
    # eta = lambda^2 is interpolated on 512 levels: error at most h^2 max|eta''| / 8
    h = float(max(f.v) - min(f.v)) / 511
    assert slope_component(handle)(f) == pytest.approx(expected, abs=h * h / 4 + 1e-9)


def test_slope_component_null_on_constants():
    handle = opaque(kernel_valuation(poly((2, 0, 1.0), (1, 1, 1.0), (3, 0, -0.2))))
    slope = slope_component(handle)
    assert slope.vanishes_on_constants
    for c in np.linspace(-3, 3, 13):
        assert abs(slope(constant(F(c).limit_denominator(64)))) <= 1e-10
    W = kernel_valuation(poly((0, 1, 1.0)))
    assert slope_component(W)(PEAK) == W(PEAK)


# -- axiom checkers ---------------------------------------------------------------

def test_identity_trivial_and_disjoint():
    handle = kernel_valuation(poly((1, 1, 1.0), (0, 2, 0.5)))
    assert check_valuation_identity(handle, TENT, TENT) == 0.0
    f = make_hat(HatParams(2, F(1, 8), 0, 0))
    g = make_hat(HatParams(3, F(1, 16), 0, F(1, 2)))
    assert abs(handle(join(f, g)) + handle(meet(f, g)) - handle(f) - handle(g)) <= 1e-12


@given(pl_functions(max_nodes=10), pl_functions(max_nodes=10), pl_functions(max_nodes=10))
def test_axioms_polynomial(f, g, h):
    handle = kernel_valuation(poly((0, 0, 1.0), (2, 1, -0.5), (1, 2, 0.25), (3, 0, 0.1)))
    assert check_valuation_identity(handle, f, g) <= 1e-10
    assert check_inclusion_exclusion(handle, [f, g, h]) <= 1e-10


def test_inclusion_exclusion_examples():
    handle = kernel_valuation(poly((0, 1, 1.0), (1, 1, 1.0)))
    assert check_inclusion_exclusion(handle, [TENT, PEAK]) == check_valuation_identity(handle, TENT, PEAK)
    bumps = [make_hat(HatParams(2, F(1, 16), 0, F(k, 3))) for k in range(3)]
    assert check_inclusion_exclusion(handle, bumps) <= 1e-10
    teeth = [rotate(make_hat(HatParams(1, F(1, 8), 0, 0)), F(k, 4)) for k in range(4)]
    assert check_inclusion_exclusion(handle, teeth) <= 1e-10
    with pytest.raises(ValueError):
        check_inclusion_exclusion(handle, [TENT])


@given(pl_functions(max_nodes=10), st.lists(unit_points, min_size=1, max_size=16))
def test_invariance(f, thetas):
    handle = kernel_valuation(poly((1, 1, 1.0), (2, 0, 1.0)))
    assert check_invariance(handle, f, [rotation(t) for t in thetas] + [reflection()]) <= 1e-10
    assert check_invariance(handle, f, [lambda x: x]) == 0.0


def test_symmetrization_halves():
    handle = kernel_valuation(poly((1, 1, 1.0), (2, 2, 0.3)))
    hi, lo = symmetrize(PEAK)
    assert handle(PEAK) == pytest.approx(0.5 * (handle(hi) + handle(lo)), abs=1e-12)


def test_require_flags():
    handle = ValuationHandle(lambda f: 0.0, rotation_invariant=False, vanishes_on_constants=True)
    with pytest.raises(PreconditionError):
        handle.require("rotation_invariant")


# -- probes -----------------------------------------------------------------------

def test_tau_probe_constant_and_interpolants():
    handle = kernel_valuation(poly((1, 1, 1.0), (2, 0, 1.0)))
    rep = tau_continuity_probe(handle, [PEAK] * 3, PEAK)
    assert rep.deviations == [0.0] * 3
    peak3 = from_breakpoints([(0, 0), (F(1, 3), 1), (F(2, 3), 0)])
    ns = (4, 8, 16, 32, 64, 128)
    seq = [interpolate_samples([peak3(F(k, n)) for k in range(n)]) for n in ns]
    rep = tau_continuity_probe(handle, seq, peak3, lip_bound=3)
    assert rep.bounded
    assert all(b <= a for a, b in zip(rep.deviations, rep.deviations[1:]))
    assert all(dev <= 8 / n for dev, n in zip(rep.deviations, ns))


def test_tau_probe_flags_unbounded():
    handle = kernel_valuation(poly((0, 1, 1.0)))
    seq = [make_saw(SawParams(0, m, m)) for m in (1, 2, 4)]
    assert not tau_continuity_probe(handle, seq, constant(0), lip_bound=2).bounded


def test_tau_probe_step_kernel_interleaved():
    handle = kernel_valuation(KernelSpec.step_slope(1))
    seq = []
    for m in (4, 8, 16, 32):
        seq += [make_saw(SawParams(1 + F(1, 4 * m), 1, m)), make_saw(SawParams(1 - F(1, 4 * m), 1, m))]
    rep = tau_continuity_probe(handle, seq, make_saw(SawParams(1, 1, 64)))
    assert all(dv == 1.0 for dv in rep.consecutive_delta_v[::2])
    assert rep.consecutive_d_tau[-1] == F(1, 64)


def test_uniform_probe():
    zero = ValuationHandle(lambda f: 0.0, True, True)
    assert uniform_continuity_probe(zero, 2, budget=30).worst_delta_v == 0.0
    smooth = kernel_valuation(poly((1, 1, 1.0)))
    rep = uniform_continuity_probe(smooth, 2, budget=60, seed=1)
    assert rep.modulus < 50
    step = kernel_valuation(KernelSpec.step_slope(1))
    rep = uniform_continuity_probe(step, 2, budget=300, seed=3, delta=F(1, 8))
    assert rep.worst_delta_v >= 1.0 and rep.worst_d_tau <= F(1, 8)
