"""Acceptance criteria, one test per criterion at its stated tolerance.

Run directly (``python3 tests/test_acceptance.py``) for a plain pass/fail listing;
under pytest use ``-s`` to see the lines.
"""
from __future__ import annotations

import sys

import pytest

from lipval.verification import CHECKS

# name -> (threshold on the reported metric, wall-clock limit in seconds or None)
CRITERIA = {
    "lattice_exactness": (0.0, 5.0),
    "valuation_axioms": (1e-10, None),
    "kernel_round_trip": (1e-6, 10.0),
    "main_reconstruction": (1e-5, None),
    "flat_invisibility": (1e-10, None),
    "kernel_consistency": (1e-4, None),
    "nu_additivity": (1e-10, None),
    "tau_counterexample": (0.0, None),
    "control_measure": (0.05, 30.0),
    "geometry_bounds": (0.0, None),
}


def run_criterion(name: str):
    result = CHECKS[name](seed=0)
    print(result.line())
    return result


@pytest.mark.parametrize("name", list(CRITERIA))
def test_criterion(name):
    threshold, limit = CRITERIA[name]
    r = run_criterion(name)
    assert r.threshold == threshold
    if limit is not None:
        assert r.details.get("time_limit") == limit
        assert r.seconds < limit
    assert r.passed, r.line()
    assert r.metric <= threshold


def test_round_trip_rate_and_extraction():
    r = CHECKS["kernel_round_trip"](seed=0)
    assert 3 <= r.details["min_ratio"] <= r.details["max_ratio"] <= 5


def test_flat_negative_control_separates():
    r = CHECKS["flat_invisibility"](seed=0)
    assert r.details["negative_control"] >= 1e-3


def test_full_circle_value():
    r = CHECKS["nu_additivity"](seed=0)
    assert r.details["full_circle_residual"] <= 1e-8


def test_control_rotation_consistency():
    r = CHECKS["control_measure"](seed=0)
    assert r.details["rotation_residual"] <= 1e-9


if __name__ == "__main__":
    failures = 0
    for criterion in CRITERIA:
        failures += not run_criterion(criterion).passed
    sys.exit(1 if failures else 0)
