"""Method-of-steps integration of the neutral equation on a delay-aligned grid.

The step is ``h = 1/N`` so every integer time is a node.  Derivatives are kept
as two arrays, left and right limits, because the solution of a neutral
equation generally has derivative jumps that the ``A_{-1}`` term carries from
one integer time to the next; off the jump nodes the two arrays coincide.

At node ``t_k`` the distributed term is the composite trapezoid rule over the
window ``[t_k - 1, t_k]``.  The newest node enters with weight ``h/2``, and
``z(t_k)`` is itself the trapezoid update of ``z'``, so each step solves one
linear system with the constant matrix ``I - (h/2) A_2(0) - (h^2/4) A_3(0)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainViolation, OffGrid, SingularStep
from .model import M2State, OutputKind, in_domain, trapezoid_weights

__all__ = [
    "Trajectory",
    "simulate",
    "semigroup_state",
    "output_trace",
    "convergence_probe",
    "write_trajectory_csv",
    "steps_for",
]


def steps_for(T, N):
    """Number of grid steps covering ``[0, T]``; ``T`` must be a multiple of ``1/N``."""
    steps = int(round(T * N))
    if steps < 0 or abs(steps - T * N) > 1e-9 * max(1.0, T * N):
        raise OffGrid(f"T={T} is not a multiple of h=1/{N}")
    return steps


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Solution samples on ``-1, -1 + h, ..., t_end``.

    ``dz_plus``/``dz_minus`` are right/left derivative limits.  ``z`` holds
    right limits; ``z_minus`` is set only for mild solutions, whose values jump
    at integer times.  Control and output traces, when present, are sampled on
    the nodes of ``[0, t_end]``.
    """

    N: int
    t_end: float
    z: np.ndarray
    dz_minus: np.ndarray
    dz_plus: np.ndarray
    u: np.ndarray | None = None
    y: np.ndarray | None = None
    z_minus: np.ndarray | None = None

    @property
    def h(self):
        return 1.0 / self.N

    @property
    def t(self):
        return -1.0 + self.h * np.arange(self.z.shape[0])

    @property
    def z_samples(self):
        return self.z

    @property
    def dz_samples(self):
        return self.dz_plus

    @property
    def u_samples(self):
        return self.u

    @property
    def y_samples(self):
        return self.y

    def index(self, t):
        k = int(round((t + 1.0) * self.N))
        if k < 0 or k >= self.z.shape[0] or abs(k - (t + 1.0) * self.N) > 1e-9 * self.N:
            raise OffGrid(f"t={t} is not a node of this trajectory")
        return k


class _Stepper:
    """Batched marcher; arrays have shape (nodes, n, batch).

    ``z`` carries right limits and ``zl`` left limits.  They differ only for
    states outside D(A), whose mild solutions jump at integer times.
    """

    def __init__(self, sys, N):
        self.sys = sys
        self.N = N
        self.h = h = 1.0 / N
        n = sys.n
        eye = np.eye(n)
        A2 = sys.A2.nodes(N, n)
        A3 = sys.A3.nodes(N, n)
        self.has_A2 = not sys.A2.is_zero
        self.has_A3 = not sys.A3.is_zero
        self.A2_0 = A2[N]
        # window sums as single matmuls: (n, N*n) @ (N*n, b); panel j pairs right limits at
        # its left node with left limits at its right node
        self.K2p = 0.5 * h * A2[:N].transpose(1, 0, 2).reshape(n, N * n)
        self.K2m = 0.5 * h * A2[1:N].transpose(1, 0, 2).reshape(n, (N - 1) * n)
        self.K3p = 0.5 * h * A3[:N].transpose(1, 0, 2).reshape(n, N * n)
        self.K3m = 0.5 * h * A3[1:N].transpose(1, 0, 2).reshape(n, (N - 1) * n)
        self.W3_0 = 0.5 * h * A3[N]
        M = eye - 0.5 * h * self.A2_0 - 0.5 * h * self.W3_0
        if abs(np.linalg.det(M)) < 1e-14 or np.linalg.cond(M) > 1e14:
            raise SingularStep("I - (h/2) A2(0) - (h^2/4) A3(0) is singular", node=h)
        self.lu = scipy.linalg.lu_factor(M)

    @staticmethod
    def _window(arr, lo, hi):
        return arr[lo:hi].reshape(-1, arr.shape[2])

    def distributed(self, z, zl, dm, dp, k, include_newest):
        """Trapezoid sum of the distributed term at node k."""
        N = self.N
        q = np.zeros((self.sys.n, z.shape[2]))
        if self.has_A2:
            q += self.K2p @ self._window(dp, k - N, k)
            q += self.K2m @ self._window(dm, k - N + 1, k)
            if include_newest:
                q += 0.5 * self.h * self.A2_0 @ dm[k]
        if self.has_A3:
            q += self.K3p @ self._window(z, k - N, k)
            q += self.K3m @ self._window(zl, k - N + 1, k)
            if include_newest:
                q += self.W3_0 @ zl[k]
        return q

    def run(self, seg, dm_hist, dp_hist, steps, u=None, z0_plus=None):
        sys = self.sys
        N, h = self.N, self.h
        n, b = seg.shape[1], seg.shape[2]
        K = N + 1 + steps
        z = np.empty((K, n, b))
        zl = np.empty((K, n, b))
        dm = np.empty((K, n, b))
        dp = np.empty((K, n, b))
        z[: N + 1] = seg
        zl[: N + 1] = seg
        if z0_plus is not None:
            z[N] = z0_plus
        dm[: N + 1] = dm_hist
        dp[: N + 1] = dp_hist
        A, D1, B = sys.A_minus1, sys.D1, sys.B
        use_d1 = sys.uses_d1
        jumps = z0_plus is not None

        # t = 0: left limit is the history; the equation gives the right limit
        dp[N] = A @ dp[0] + self.distributed(z, zl, dm, dp, N, include_newest=True)
        if use_d1:
            dp[N] += D1 @ z[0]
        if u is not None:
            dp[N] += B @ u[0]
        for k in range(N + 1, K):
            j = k - N
            known_z = z[k - 1] + 0.5 * h * dp[k - 1]
            rhs = A @ dm[j] + self.distributed(z, zl, dm, dp, k, include_newest=False)
            if use_d1:
                rhs = rhs + D1 @ zl[j]
            if u is not None:
                rhs = rhs + B @ u[j]
            if self.has_A3:
                rhs = rhs + self.W3_0 @ known_z
            dm[k] = scipy.linalg.lu_solve(self.lu, rhs)
            zl[k] = known_z + 0.5 * h * dm[k]
            dp[k] = dm[k] + A @ (dp[j] - dm[j])
            if jumps:
                jz = z[j] - zl[j]
                z[k] = zl[k] + A @ jz
                if use_d1:
                    dp[k] += D1 @ jz
            else:
                z[k] = zl[k]
        return z, zl, dm, dp


def _prepare_control(u, sys, T, N, steps):
    if u is None:
        return None
    if callable(u):
        t = np.linspace(0.0, T, steps + 1)
        u = np.asarray(u(t), dtype=float).reshape(steps + 1, -1)
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.shape != (steps + 1, sys.m):
        raise ValueError(f"control must have shape {(steps + 1, sys.m)}, got {u.shape}")
    return u


def simulate(sys, init, T, N, u=None, check_domain=True):
    """Integrate the controlled neutral equation from ``init`` over ``[0, T]``.

    Parameters
    ----------
    sys : NeutralSystem
    init : M2State
        Initial state in D(A).  Resampled linearly when its grid differs from ``N``.
        With ``check_domain=False`` any state is accepted and the mild
        solution is returned; it starts from ``z(0+) = v + A_{-1} phi(-1)``.
    T : float
        Horizon, a multiple of ``1/N``.
    N : int
        Steps per unit delay, at least 8.
    u : array (N*T + 1, m) or callable, optional
        Control samples on the nodes of ``[0, T]``.

    Returns
    -------
    Trajectory
    """
    if N < 8:
        raise ValueError("N must be at least 8")
    if T <= 0:
        raise ValueError("T must be positive")
    steps = steps_for(T, N)
    if init.N != N:
        init = init.resample(N)
    compatible = in_domain(sys, init)
    if check_domain and not compatible:
        raise DomainViolation("initial state violates v = phi(0) - A_{-1} phi(-1)")
    uu = _prepare_control(u, sys, T, N, steps)
    seg = init.segment
    dm, dp = init.slopes()
    stepper = _Stepper(sys, N)
    z0 = None if compatible else (init.v + sys.A_minus1 @ seg[0])[:, None]
    z, zl, zm, zp = stepper.run(seg[..., None], dm[..., None], dp[..., None], steps,
                                None if uu is None else uu[..., None], z0_plus=z0)
    return Trajectory(N=N, t_end=steps / N, z=z[..., 0], dz_minus=zm[..., 0], dz_plus=zp[..., 0], u=uu,
                      z_minus=None if compatible else zl[..., 0])


def simulate_batch(sys, segments, T, N, dseg=None, u=None, heads=None, both=False):
    """Simulate many initial segments at once.

    ``segments`` has shape (N+1, n, b).  ``dseg`` optionally gives
    ``(left, right)`` derivative samples of the same shape; panel slopes are
    used otherwise.  ``u`` has shape (N*T+1, m, b).  ``heads`` (n, b) gives
    the head components of states outside D(A) (mild solutions); by default
    every state is taken compatible.  Returns ``z`` (right limits) of shape
    (N*(T+1)+1, n, b), or ``(z, z_minus)`` when ``both`` is set.
    """
    steps = steps_for(T, N)
    if dseg is None:
        s = np.diff(segments, axis=0) * N
        dm = np.concatenate([s[:1], s])
        dp = np.concatenate([s, s[-1:]])
    else:
        dm, dp = dseg
    z0 = None if heads is None else heads + np.einsum("ij,jb->ib", sys.A_minus1, segments[0])
    z, zl, _, _ = _Stepper(sys, N).run(segments, dm, dp, steps, u, z0_plus=z0)
    return (z, zl) if both else z


def semigroup_state(sys, traj, t):
    """State ``(z(t) - A_{-1} z(t-1), z(t + .))`` at a grid time ``0 <= t <= t_end``."""
    k = traj.index(t)
    N = traj.N
    if k < N:
        raise OffGrid("semigroup states exist only for t >= 0")
    seg = traj.z[k - N : k + 1].copy()
    if traj.z_minus is not None:
        # jump nodes: trapezoid-consistent average inside, one-sided limits at the ends
        left = traj.z_minus[k - N : k + 1]
        seg[1:-1] = 0.5 * (seg[1:-1] + left[1:-1])
        seg[-1] = left[-1]
    v = traj.z[k] - sys.A_minus1 @ traj.z[k - N]
    return M2State(
        v,
        seg,
        traj.dz_minus[k - N : k + 1].copy(),
        traj.dz_plus[k - N : k + 1].copy(),
    )


def output_trace(sys, traj, kind=None):
    """Output samples on the nodes of ``[0, t_end]``: ``C z(t)`` or ``C z(t - 1)``."""
    kind = OutputKind(kind or sys.output_kind)
    N = traj.N
    K = traj.z.shape[0]
    if kind is OutputKind.CURRENT:
        z = traj.z[N:]
    else:
        z = traj.z[: K - N]
    return z @ sys.C.T


def with_output(traj, y):
    return Trajectory(traj.N, traj.t_end, traj.z, traj.dz_minus, traj.dz_plus, traj.u, y, traj.z_minus)


def convergence_probe(sys, init, T, N_list):
    """Sup-norm errors of ``z`` against the run on the finest grid in ``N_list``.

    ``init`` is an :class:`M2State` or a callable ``phi(theta) -> (len, n)``
    (sampled afresh on every grid).  Each ``N`` must divide the next.
    Returns one error per grid except the finest.
    """
    N_list = list(N_list)
    for a, b in zip(N_list, N_list[1:]):
        if b <= a or b % a:
            raise ValueError("N_list must be increasing, each dividing the next")

    def start(N):
        if callable(init):
            return M2State.from_function(sys.A_minus1, init, N)
        return init.resample(N)

    Nf = N_list[-1]
    ref = simulate(sys, start(Nf), T, Nf)
    errors = []
    for N in N_list[:-1]:
        tr = simulate(sys, start(N), T, N)
        stride = Nf // N
        errors.append(float(np.max(np.abs(tr.z - ref.z[::stride]))))
    return np.array(errors)


def write_trajectory_csv(traj, path_or_file, sys=None):
    """CSV with columns t, z*, dz*, u*, y*; one row per node, 17 significant digits."""
    n = traj.z.shape[1]
    y = traj.y
    if y is None and sys is not None:
        y = output_trace(sys, traj)
    header = ["t"] + [f"z{i + 1}" for i in range(n)] + [f"dz{i + 1}" for i in range(n)]
    if traj.u is not None:
        header += [f"u{i + 1}" for i in range(traj.u.shape[1])]
    if y is not None:
        header += [f"y{i + 1}" for i in range(y.shape[1])]
    fmt = "{:.17g}".format
    N = traj.N

    def rows():
        for k, t in enumerate(traj.t):
            row = [fmt(t)] + [fmt(x) for x in traj.z[k]] + [fmt(x) for x in traj.dz_plus[k]]
            j = k - N
            for extra in (traj.u, y):
                if extra is None:
                    continue
                if 0 <= j < extra.shape[0]:
                    row += [fmt(x) for x in extra[j]]
                else:
                    row += [""] * extra.shape[1]
            yield row

    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows())
    else:
        with open(path_or_file, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows())
