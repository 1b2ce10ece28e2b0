"""A valuation that is continuous but not uniformly continuous.

The kernel counts slope only where the function sits at or above level 1.
Two saws, one shifted just above 1 and one just below, get values 1 and 0,
yet their distance shrinks like 1/(2m).
"""
from __future__ import annotations

from fractions import Fraction

from lipval.circle_fn import d_tau
from lipval.recovery import SawParams, make_saw
from lipval.valuations import KernelSpec, kernel_valuation


def main() -> None:
    handle = kernel_valuation(KernelSpec.step_slope(1))
    print("   m   upper     lower     distance")
    for m in (1, 2, 4, 8, 16, 32, 64):
        shift = Fraction(1, 4 * m)
        upper = make_saw(SawParams(1 + shift, 1, m))
        lower = make_saw(SawParams(1 - shift, 1, m))
        print(f"{m:4d}   {handle(upper):7.3f}   {handle(lower):7.3f}   {str(d_tau(upper, lower)):>6}")
    print("\nthe values stay one apart while the inputs converge.")


if __name__ == "__main__":
    main()
