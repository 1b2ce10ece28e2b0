"""Reading a kernel off an opaque valuation with saw functions.

A valuation is built from a kernel and then hidden behind an opaque handle.
Evaluating it on saws with more and more teeth pins down the kernel value at
each (level, slope) pair, and the raw sequence shows its 1/m^2 approach.
"""
from __future__ import annotations

from fractions import Fraction

from lipval.recovery import RecoverySettings, SawParams, make_saw, recover_kernel_point
from lipval.valuations import KernelSpec, kernel_valuation, opaque


def main() -> None:
    kspec = KernelSpec.polynomial([(0, 1, 1.0), (2, 1, 1.0), (1, 2, -0.25)])
    handle = opaque(kernel_valuation(kspec))

    saw = make_saw(SawParams(Fraction(1, 2), 2, 3))
    print("saw with 3 teeth around 1/2, slope 2:")
    print("  nodes:", [(str(s), str(v)) for s, v in saw.nodes])

    lam, sigma = Fraction(1, 2), Fraction(2)
    truth = float(kspec(float(lam), float(sigma)))
    raw = recover_kernel_point(handle, lam, sigma, RecoverySettings(extrapolate=False))
    print(f"\nkernel at level {lam}, slope {sigma}: exact {truth:.12f}")
    print("   m    saw value         error      ratio")
    prev = None
    for m, v in zip(raw.schedule, raw.values):
        err = v - truth
        ratio = f"{prev / err:6.3f}" if prev else "     -"
        print(f"{m:4d}  {v:.12f}  {err: .3e}  {ratio}")
        prev = err

    extrapolated = recover_kernel_point(handle, lam, sigma)
    print(f"\nlast raw value error     {abs(raw.value - truth):.3e}")
    print(f"extrapolated value error {abs(extrapolated.value - truth):.3e}")


if __name__ == "__main__":
    main()
