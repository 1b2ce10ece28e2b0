from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lipval.circle_fn import (
    ArcSet,
    constant,
    is_supported_in,
    join_all,
    level_measure,
    lip,
    median,
    rotate,
    sup_norm,
    support,
)
from lipval.recovery import (
    HatParams,
    RecoverySettings,
    SawParams,
    control_measure_estimate,
    flat_invisibility_check,
    make_hat,
    make_psi,
    make_saw,
    recover_kernel_grid,
    recover_kernel_point,
    saw_decomposition_check,
    saw_teeth,
    theta_oracle_for_kernel,
    zigzag,
)
from lipval.valuations import (
    KernelSpec,
    PreconditionError,
    ValuationHandle,
    kernel_valuation,
    opaque,
)

levels = st.fractions(-2, 2, max_denominator=16)
slopes = st.fractions(0, 4, max_denominator=16)


def kv(*terms):
    return kernel_valuation(KernelSpec.polynomial(terms))


ZERO = ValuationHandle(lambda f: 0.0, True, True, name="zero")


# -- constructions --------------------------------------------------------------

def test_psi():
    assert make_psi(F(1, 3), 0) == constant(F(1, 3))
    psi = make_psi(0, 4)
    assert psi(0) == -1 and psi(F(1, 2)) == 1
    assert median(make_psi(F(2, 5), 3)) == F(2, 5)


@given(levels, slopes.filter(lambda x: x > 0), st.integers(1, 40))
def test_saw_properties(lam, sigma, m):
    saw = make_saw(SawParams(lam, sigma, m))
    assert lip(saw) == sigma
    assert level_measure(saw, "ge", lam) == F(1, 2)
    assert max(saw.v) - min(saw.v) == sigma / (2 * m)
    assert max(saw.v) == lam + sigma / (4 * m)
    assert join_all(saw_teeth(SawParams(lam, sigma, m))) == saw


def test_saw_special_cases():
    assert make_saw(SawParams(F(1, 2), 3, 1)) == make_psi(F(1, 2), 3)
    assert all(make_saw(SawParams(2, 0, m)) == constant(2) for m in (1, 5))
    with pytest.raises(ValueError):
        SawParams(0, 1, 0)
    with pytest.raises(ValueError):
        SawParams(0, -1, 2)


def test_hat():
    h = make_hat(HatParams(4, F(1, 8), 0, 0))
    assert max(h.v) == F(1, 2) and len(h.nodes) == 3
    h2 = make_hat(HatParams(2, F(1, 8), F(1, 4), F(1, 3)))
    assert support(h2).measure() == F(1, 2)
    assert rotate(make_hat(HatParams(2, F(1, 8), F(1, 4), 0)), F(1, 3)) == h2
    for bad in [(1, 0, 0, 0), (1, F(1, 3), 0, 0), (1, F(1, 4), F(3, 4), 0)]:
        with pytest.raises(ValueError):
            HatParams(*bad)
    full = make_hat(HatParams(1, F(1, 4), F(1, 2), 0))
    assert support(full).measure() == 1


# -- recovery ---------------------------------------------------------------------

def test_recovery_zero_and_linear():
    e = recover_kernel_point(ZERO, 1, 1)
    assert e.values == [0.0] * len(e.schedule) and e.value == 0.0
    handle = kv((0, 1, 1.0))
    e = recover_kernel_point(handle, F(1, 3), F(3, 2))
    assert all(v == pytest.approx(1.5, abs=1e-14) for v in e.values)


@pytest.mark.parametrize("lam,sigma,expected", [
    (F(3, 2), 1, 1.0), (F(1, 2), 2, 0.0), (1, 2, 1.0), (1, 1, 0.5), (F(9, 8), 2, 2.0),
])
def test_recovery_step_kernel(lam, sigma, expected):
    handle = kernel_valuation(KernelSpec.step_slope(1))
    e = recover_kernel_point(handle, lam, sigma)
    assert e.value == expected and not e.oscillation


def test_step_kernel_oscillation_near_threshold():
    handle = kernel_valuation(KernelSpec.step_slope(1))
    # saws of amplitude 1/m still straddle the threshold for every m <= 256
    e = recover_kernel_point(handle, 1 + F(1, 1024), 4)
    assert e.oscillation
    assert recover_kernel_point(handle, 1 + F(1, 64), 4).value == 4.0


def test_recovery_preconditions():
    with pytest.raises(PreconditionError):
        recover_kernel_point(kv((1, 0, 1.0)), 0, 1)
    rot = ValuationHandle(lambda f: 0.0, False, True)
    with pytest.raises(PreconditionError):
        recover_kernel_point(rot, 0, 1)
    with pytest.raises(ValueError):
        RecoverySettings(schedule=(4, 2))


def test_grid_ordering_and_csv():
    kspec = KernelSpec.polynomial([(1, 1, 1.0), (0, 2, 0.5)])
    rep = recover_kernel_grid(opaque(kernel_valuation(kspec)), [-1, 0, F(1, 2), 1, 2], [0, 1, 2])
    assert [(e.lam, e.sigma) for e in rep.entries][:4] == [(-1, 0), (-1, 1), (-1, 2), (0, 0)]
    truth = kspec(np.repeat([-1, 0, 0.5, 1, 2], 3), np.tile([0, 1, 2], 5)).reshape(5, 3)
    assert np.max(np.abs(rep.table() - truth)) <= 1e-6
    assert not any(e.oscillation for e in rep.entries)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "lambda,sigma,m_last,value,cauchy_residual,oscillation"
    assert len(lines) == 16 and lines[1].startswith("-1/1,0/1,256,")


def test_single_point_grid_matches_point():
    handle = kv((2, 1, 1.0))
    rep = recover_kernel_grid(handle, [F(1, 2)], [1])
    assert rep.entries[0].value == recover_kernel_point(handle, F(1, 2), 1).value


def test_quadratic_rate_without_extrapolation():
    handle = kv((2, 1, 1.0))
    e = recover_kernel_point(handle, F(1, 2), 2, RecoverySettings(extrapolate=False))
    errs = [v - 0.5 for v in e.values]
    assert all(3 <= a / b <= 5 for a, b in zip(errs, errs[1:]))
    assert e.value == e.raw_last


def test_decompose_adds_flat_part_back():
    kspec = KernelSpec.polynomial([(2, 0, 1.0), (1, 1, 1.0)])
    rep = recover_kernel_grid(opaque(kernel_valuation(kspec)), [F(1, 2)], [1], decompose=True)
    assert rep.entries[0].value == pytest.approx(0.75, abs=1e-6)


# -- structural checks--------------------------------------------------------------

def test_flat_invisibility():
    ells = [0, F(1, 8), F(1, 4), 1 - 2 * F(1, 8)]
    s0s = [0, F(1, 3)]
    W = kv((0, 1, 1.0), (2, 3, -1.0))
    assert flat_invisibility_check(W, 2, F(1, 8), [0], [0]) == 0.0
    assert flat_invisibility_check(W, 2, F(1, 8), ells, s0s) <= 1e-10
    flat = kv((1, 0, 1.0))
    with pytest.raises(PreconditionError):
        flat_invisibility_check(flat, 2, F(1, 8), ells, s0s)
    assert flat_invisibility_check(flat, 2, F(1, 8), ells, s0s, check_preconditions=False) > 0


@given(levels, slopes.filter(lambda x: x > 0), st.sampled_from([1, 2, 8]))
def test_saw_decomposition(lam, sigma, m):
    res = saw_decomposition_check(kv((0, 1, 1.0), (1, 1, 0.5)), SawParams(lam, sigma, m))
    assert res.pl_identity
    assert res.residual <= 1e-10


def test_saw_decomposition_slope_kernel_m4():
    res = saw_decomposition_check(kv((0, 1, 1.0)), SawParams(0, 3, 4))
    assert res.direct == pytest.approx(3.0) and res.residual <= 1e-10


# -- control measures -------------------------------------------------------------

def test_zigzag_constraints():
    region = ArcSet.from_pieces([(F(1, 8), F(3, 8)), (F(1, 2), F(5, 8))])
    z = zigzag(region, 3, 8, F(1, 64))
    assert lip(z) == 3 and sup_norm(z) <= F(1, 64)
    assert is_supported_in(z, ArcSet(region.arcs, "open"))


def test_control_zero_valuation():
    est = control_measure_estimate(ZERO, 0, 1, ArcSet.from_pieces([(0, F(1, 4))]))
    assert est.mu_plus == est.mu_minus == est.theta == 0.0


@pytest.mark.parametrize("terms,cap,theta", [
    ([(0, 1, 1.0)], 2, 2.0),
    ([(0, 2, -1.0), (0, 1, 1.0)], 1, 0.25),
    ([(0, 3, 1.0)], 1, 1.0),
    ([(0, 1, -1.0)], 1, 1.0),
])
def test_control_against_oracle(terms, cap, theta):
    kspec = KernelSpec.polynomial(terms)
    oracle = theta_oracle_for_kernel(kspec, 0, cap)
    assert oracle == pytest.approx(theta, rel=1e-6)
    est = control_measure_estimate(kernel_valuation(kspec), 0, cap, ArcSet.from_pieces([(0, F(1, 4))]))
    assert abs(est.theta - oracle) <= 0.05 * oracle


def test_control_monotone_in_budget_and_grid():
    handle = kv((0, 2, -1.0), (0, 1, 1.0))
    region = ArcSet.from_pieces([(0, F(1, 4))])
    small = control_measure_estimate(handle, 0, 1, region, teeth_budget=8, sigma_points=5)
    big = control_measure_estimate(handle, 0, 1, region, teeth_budget=32, sigma_points=5)
    fine = control_measure_estimate(handle, 0, 1, region, teeth_budget=32, sigma_points=9)
    assert small.theta <= big.theta <= fine.theta


def test_control_trace_and_rotation():
    handle = kv((0, 1, 1.0), (1, 1, 1.0))
    e1 = control_measure_estimate(handle, F(1, 2), 1, ArcSet.from_pieces([(0, F(1, 8))]), trace=True)
    e2 = control_measure_estimate(handle, F(1, 2), 1, ArcSet.from_pieces([(F(1, 2), F(5, 8))]))
    assert abs(e1.theta - e2.theta) <= 1e-9
    assert e1.trace and {"l", "sigma", "teeth", "sign", "value"} <= set(e1.trace[0])


def test_theta_oracle_zero_cap():
    assert theta_oracle_for_kernel(KernelSpec.polynomial([(0, 1, 1.0)]), 0, 0) == 0.0
