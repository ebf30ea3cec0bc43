"""Example 1: z'(t) = z'(t-1) in R^2 with the full state measured.

The characteristic determinant is (lam (1 - e^{-lam}))^2, so every point
2 pi i k is a double eigenvalue and 0 is a quadruple one.  We locate them,
decide exact observability for both output kinds, and look at the
empirical Gramian on either side of the minimal time.

Run:  python demos/example1_observability.py
"""

import numpy as np

from neutral_obsctrl import (
    ComplexRegion,
    check_exact_observability,
    eigenvalues_in_region,
    load_fixture,
    observability_gramian,
)


def main():
    sys = load_fixture("example1")

    print("Eigenvalues in Re [-1, 1], Im [-13, 13]:")
    for r in eigenvalues_in_region(sys, ComplexRegion(-1.01, 0.99, -13.02, 12.98)):
        print(f"  {r.lam.real:+.2e} {r.lam.imag:+.10f}i  multiplicity {r.multiplicity}")
    print(f"  (2 pi = {2 * np.pi:.10f})")

    # Both outputs qualify: A_{-1} = I is invertible, so the current output is not excluded.
    for kind in ("delayed", "current"):
        v = check_exact_observability(sys, output_kind=kind)
        print(f"{kind:>8} output: {v.holds.value}, observable for T > {v.minimal_time}")

    # Above the minimal time the smallest Gramian eigenvalue settles.
    for kind in ("delayed", "current"):
        vals = [observability_gramian(sys, 1.5, N, kind).sigma_min for N in (16, 32, 64)]
        print(f"sigma_min at T = 1.5, {kind} output, N = 16, 32, 64: " + ", ".join(f"{s:.4f}" for s in vals))


if __name__ == "__main__":
    main()
