"""Second-order convergence of the method-of-steps simulator.

The test problem z'(t) = int_{-1}^0 z(t+s) ds starts from cos(pi theta).
Errors are measured against an N = 4096 run; each halving of the step
should divide the error by about 4.

Run:  python demos/simulator_order.py
"""

import numpy as np

from neutral_obsctrl import M2State, convergence_probe, load_fixture, simulate


def main():
    sys = load_fixture("scalar_a3")
    Ns = [32, 64, 128, 256, 512, 4096]
    errors = convergence_probe(sys, lambda th: np.cos(np.pi * th)[:, None], 3.0, Ns)
    for N, e, nxt in zip(Ns, errors, list(errors[1:]) + [None]):
        ratio = "" if nxt is None else f"   ratio {e / nxt:.3f}"
        print(f"N = {N:4d}  sup error {e:.3e}{ratio}")

    # a linear history is reproduced exactly by the scheme
    neutral = load_fixture("example1_scalar")
    traj = simulate(neutral, M2State.from_segment(neutral.A_minus1, np.linspace(-1, 0, 17)), 3.0, 16)
    print(f"\nz'(t) = z'(t-1) from z(theta) = theta: max |z(t) - t| = {np.abs(traj.z[:, 0] - traj.t).max():.1e}")


if __name__ == "__main__":
    main()
