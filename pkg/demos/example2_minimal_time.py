"""Example 2: z1' = 0, z2' = z2'(t-1) + z1(t-1).

Here det Delta = lam^2 (1 - e^{-lam}) and A_{-1} = diag(0, 1) is singular.
With the delayed output C z(t-1) the system is observable on [0, T] only for
T > 1; the undelayed output C z(t) never yields exact observability.  The
Gramian study shows the threshold: at T = 1.5 the smallest eigenvalue is
stable under refinement, at T = 1 it vanishes.

Run:  python demos/example2_minimal_time.py
"""

from neutral_obsctrl import (
    ComplexRegion,
    check_exact_observability,
    eigenvalues_in_region,
    load_fixture,
    observability_gramian,
)


def main():
    sys = load_fixture("example2")

    roots = eigenvalues_in_region(sys, ComplexRegion(-1, 1, -7, 7))
    print("Eigenvalues in Re [-1, 1], Im [-7, 7]:",
          ", ".join(f"{r.lam:.6f} (x{r.multiplicity})" for r in roots))

    delayed = check_exact_observability(sys, output_kind="delayed")
    print(f"delayed output: {delayed.holds.value}, T > {delayed.minimal_time}")
    current = check_exact_observability(sys, output_kind="current")
    print(f"current output: {current.holds.value}; " + "; ".join(f.message for f in current.failures))

    print("\nsmallest Gramian eigenvalue, delayed output")
    print("   N    T = 1.5    T = 1.0    T = 1.0 restricted to D(A)")
    for N in (16, 32, 64, 128):
        above = observability_gramian(sys, 1.5, N).sigma_min
        at = observability_gramian(sys, 1.0, N).sigma_min
        dom = observability_gramian(sys, 1.0, N, domain_only=True).sigma_min
        print(f"{N:4d}  {above:9.5f}  {at:9.2e}  {dom:9.2e}")
    print("On D(A) the T = 1 value is h / (h + 4) with h = 1/N: it goes to zero with the mesh.")
    print("On all of M2 it is exactly zero: a head-only state leaves no trace in z(t-1) on [0, 1].")


if __name__ == "__main__":
    main()
