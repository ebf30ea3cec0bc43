"""The two sides of the duality identity, computed independently.

Left:  the reachability map of the transposed system, paired with x0 in M2.
Right: the observation map applied to F^{-1} x0, paired with u in L2.
Both go through the same trapezoid discretization, so the gap is a
discretization error that shrinks by about 4 per grid doubling.

Run:  python demos/duality_check.py
"""

import numpy as np

from neutral_obsctrl import (
    ConstantKernel,
    F_apply,
    F_inverse_apply,
    NeutralSystem,
    load_fixture,
    m2_norm,
    verify_duality,
)
from neutral_obsctrl.duality import random_domain_state


def main():
    rng = np.random.default_rng(1)
    random_sys = NeutralSystem(
        A_minus1=0.6 * rng.standard_normal((2, 2)),
        B=rng.standard_normal((2, 1)),
        C=rng.standard_normal((1, 2)),
        A2=ConstantKernel(0.3 * rng.standard_normal((2, 2))),
        A3=ConstantKernel(0.3 * rng.standard_normal((2, 2))),
    )
    for name, sys in (("Example 1", load_fixture("example1")), ("random 2x2", random_sys)):
        print(name)
        prev = None
        for N in (128, 256, 512):
            r = verify_duality(sys, T=2.0, trials=5, N=N, seed=0).max_residual
            ratio = "" if prev is None else f"   ratio {prev / r:.2f}"
            print(f"  N = {N:4d}  worst relative gap {r:.3e}{ratio}")
            prev = r

    sys = load_fixture("example2")
    xi = random_domain_state(rng, sys, 256)
    back = F_inverse_apply(sys, F_apply(sys, xi))
    print(f"\nF round trip on a random D(A) state of Example 2: {m2_norm(back - xi) / m2_norm(xi):.1e}")


if __name__ == "__main__":
    main()
