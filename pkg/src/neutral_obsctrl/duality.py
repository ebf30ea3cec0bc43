"""Duality machinery: the Volterra operator, the map F and its inverse, the
adjoint semigroup, the reachability map of the transposed system, the
duality identity and the empirical observability Gramian.

Conventions
-----------
Segments on ``[-1, 0]`` are stored in theta-order (node ``i`` is
``theta = -1 + i h``).  The constructions around F are naturally written in
the reflected variable ``x = -theta`` (for ``psi``) or ``x = theta + 1`` (for
``z_0(theta) = w(theta + 1)``); helpers below work in x-order and convert at the
boundary.  Oriented integrals ``int_0^theta`` are negative for ``theta < 0``.

All discrete formulas use the same composite trapezoid rule as the
simulator.  ``F_apply`` and ``F_inverse_apply`` are exact discrete inverses of
each other, and the per-node solve in ``F_inverse_apply`` uses the
simulator's step matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapExceeded, DomainViolation
from .model import (
    M2State,
    OutputKind,
    in_domain,
    m2_inner,
    transpose_system,
    trapezoid_weights,
)
from .simulate import (
    output_trace,
    semigroup_state,
    simulate,
    simulate_batch,
    steps_for,
)

__all__ = [
    "volterra_apply",
    "solve_I_plus_V",
    "F_apply",
    "F_inverse_apply",
    "tilde_resolvent_apply",
    "tilde_generator_apply",
    "sandwich_ratios",
    "adjoint_semigroup_apply",
    "reachability_apply",
    "verify_duality",
    "DualityReport",
    "observability_gramian",
    "GramianEstimate",
    "random_smooth_segment",
    "random_m2_state",
    "random_domain_state",
    "trapezoid_slopes",
]


# ---------------------------------------------------------------- helpers

def _kernels(sys, N):
    n = sys.n
    return sys.A2.nodes(N, n), sys.A3.nodes(N, n)


def _as_batch(a):
    a = np.asarray(a, dtype=float)
    return (a[..., None], True) if a.ndim == 2 else (a, False)


def _cumtrapz(f, h):
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * h * (f[1:] + f[:-1]), axis=0)
    return out


def _history_sums(A2, A3, mu_p, mu_m, w, k, N, h):
    """``sum_j omega_j [A2 mu + A3 w]`` over the panels of ``[0, x_k]``, newest node excluded.

    ``mu_p``/``mu_m`` are right/left limits; kernel node ``N + j - k`` sits at ``theta = (j - k) h``.
    """
    if k == 0:
        return np.zeros_like(w[0])
    q = 0.5 * h * np.einsum("jab,jbc->ac", A2[N - k : N], mu_p[:k])
    if k > 1:
        q += 0.5 * h * np.einsum("jab,jbc->ac", A2[N - k + 1 : N], mu_m[1:k])
    wts = np.full(k, h)
    wts[0] = 0.5 * h
    q += np.einsum("j,jab,jbc->ac", wts, A3[N - k : N], w[:k])
    return q


def trapezoid_slopes(w, h):
    """Derivative samples whose cumulative trapezoid integral reproduces ``w`` exactly.

    Solutions of ``mu_k + mu_(k+1) = 2 (w_(k+1) - w_k) / h`` form a one-parameter
    family differing by ``c (-1)^k``; ``c`` is fitted to the second-order
    finite-difference derivative.
    """
    w = np.asarray(w, dtype=float)
    d = 2.0 * np.diff(w, axis=0) / h
    p = np.zeros_like(w)
    for k in range(d.shape[0]):
        p[k + 1] = d[k] - p[k]
    alt = (-1.0) ** np.arange(w.shape[0])
    alt = alt.reshape((-1,) + (1,) * (w.ndim - 1))
    g = np.gradient(w, h, axis=0, edge_order=2)
    c = np.mean((g - p) * alt, axis=0)
    return p + c * alt


# ---------------------------------------------------------------- Volterra operator

def volterra_apply(sys, mu):
    """``(V mu)(theta) = int_0^theta [A2(theta - s) mu(s) - A3(theta - s) int_0^s mu] ds``.

    ``mu`` has shape (N+1, n) or (N+1, n, b) in theta-order.
    """
    mu, single = _as_batch(mu)
    N = mu.shape[0] - 1
    h = 1.0 / N
    A2, A3 = _kernels(sys, N)
    m = mu[::-1]
    W = _cumtrapz(m, h)
    out = np.zeros_like(m)
    for k in range(1, N + 1):
        q = _history_sums(A2, A3, m, m, W, k, N, h)
        q += 0.5 * h * (A2[N] @ m[k] + A3[N] @ W[k])
        out[k] = -q
    out = out[::-1]
    return out[..., 0] if single else out


def _tri_solve(sys, g, w0):
    """Solve ``mu_k - sum_j omega_j [A2 mu_j + A3 w_j] = g_k`` in x-order with ``w`` the trapezoid integral of ``mu``."""
    N = g.shape[0] - 1
    h = 1.0 / N
    n = sys.n
    A2, A3 = _kernels(sys, N)
    mu = np.zeros_like(g)
    w = np.zeros_like(g)
    w[0] = w0
    mu[0] = g[0]
    if sys.A2.is_zero and sys.A3.is_zero:
        mu[:] = g
        w[1:] = w0 + np.cumsum(0.5 * h * (g[1:] + g[:-1]), axis=0)
        return mu, w
    M = np.eye(n) - 0.5 * h * A2[N] - 0.25 * h * h * A3[N]
    lu = scipy.linalg.lu_factor(M)
    for k in range(1, N + 1):
        known_w = w[k - 1] + 0.5 * h * mu[k - 1]
        rhs = g[k] + _history_sums(A2, A3, mu, mu, w, k, N, h) + 0.5 * h * A3[N] @ known_w
        mu[k] = scipy.linalg.lu_solve(lu, rhs)
        w[k] = known_w + 0.5 * h * mu[k]
    return mu, w


def solve_I_plus_V(sys, rhs):
    """Solve ``(I + V) mu = rhs`` by forward substitution (theta-order in and out)."""
    r, single = _as_batch(rhs)
    mu, _ = _tri_solve(sys, r[::-1], np.zeros_like(r[0]))
    mu = mu[::-1]
    return mu[..., 0] if single else mu


# ---------------------------------------------------------------- F and its inverse

def F_apply(sys, xi, check_domain=True):
    """Map an initial state ``xi`` in D(A) to the matching initial state of the tilde system.

    With ``w(x) = z_0(x - 1)`` on ``[0, 1]`` and ``mu = w'``, returns
    ``(w(0), psi_0)`` where ``psi_0(-x) = mu(x) - int_0^x [A2(y - x) mu(y) + A3(y - x) w(y)] dy - A2(-x) w(0)``.
    Derivative jumps carried by ``xi`` are honoured panel by panel.
    """
    if check_domain and not in_domain(sys, xi):
        raise DomainViolation("F is defined on D(A) only")
    N = xi.N
    h = xi.h
    w = xi.segment[..., None]
    if xi.has_derivative:
        mu_m = xi.dseg_minus[..., None]
        mu_p = xi.dseg_plus[..., None]
    else:
        mu_m = mu_p = trapezoid_slopes(xi.segment, h)[..., None]
    A2, A3 = _kernels(sys, N)
    w0 = w[0]
    psi = np.empty_like(w)
    for k in range(N + 1):
        if k == 0:
            lead = mu_p[0]
        elif k == N:
            lead = mu_m[N]
        else:
            lead = 0.5 * (mu_m[k] + mu_p[k])
        q = _history_sums(A2, A3, mu_p, mu_m, w, k, N, h)
        if k:
            q += 0.5 * h * (A2[N] @ mu_m[k] + A3[N] @ w[k])
        psi[k] = lead - q - A2[N - k] @ w0
    return M2State(w0[:, 0].copy(), psi[::-1, :, 0].copy())


def F_inverse_apply(sys, x):
    """Recover ``xi = (w(1) - A_{-1} w(0), w(theta + 1))`` from ``x = (w(0), psi_0)``.

    ``mu = w'`` solves the Volterra equation of the second kind
    ``mu(x) - int_0^x [A2(y - x) mu(y) + A3(y - x) w(y)] dy = psi_0(-x) + A2(-x) w(0)``
    node by node; the returned state carries ``mu`` as its derivative.
    """
    N = x.N
    A2, _ = _kernels(sys, N)
    w0 = np.asarray(x.v, dtype=float)
    g = x.segment[::-1] + np.einsum("kab,b->ka", A2[::-1], w0)
    mu, w = _tri_solve(sys, g[..., None], w0[:, None])
    mu, w = mu[..., 0], w[..., 0]
    return M2State(w[-1] - sys.A_minus1 @ w[0], w, mu.copy(), mu.copy())


# ---------------------------------------------------------------- tilde generator and resolvent

def tilde_generator_apply(sys, x):
    """Finite-difference application of ``A~(w, psi) = (A2(0) w + psi(0), -(psi + A2 w)' + A3 w)``."""
    N = x.N
    A2, A3 = _kernels(sys, N)
    w = np.asarray(x.v, dtype=float)
    r = x.segment + A2 @ w
    dr = np.gradient(r, x.h, axis=0, edge_order=2)
    return M2State(A2[N] @ w + x.segment[-1], -dr + A3 @ w)


def tilde_resolvent_apply(sys, y, lam=1.0):
    """``(lam I - A~)^{-1} y`` on the grid of ``y``.

    With ``r = psi + A2 w``: ``r' + lam r = (lam A2 + A3) w + y_psi``, ``r(0) = lam w - y_w`` and the
    domain condition fixes ``w`` through the trapezoid version of ``Delta(lam)``.  A D1 term acts at
    ``theta = -1`` only and enters through ``Delta``.
    """
    N = y.N
    h = y.h
    n = y.n
    A2, A3 = _kernels(sys, N)
    theta = y.grid
    e = np.exp(lam * theta)
    wt = trapezoid_weights(N)
    eye = np.eye(n)
    K = lam * A2 + A3
    T2 = np.einsum("i,iab->ab", wt * e, K)
    em = np.exp(-lam)
    Dh = lam * (eye - em * sys.A_minus1) - em * sys.D1 - T2
    yw = np.asarray(y.v, dtype=float)
    rhs = (eye - em * sys.A_minus1) @ yw + np.einsum("i,ia->a", wt * e, y.segment)
    w = np.linalg.solve(Dh, rhs)
    r0 = lam * w - yw
    f = K @ w + y.segment
    ef = e[:, None] * f
    # oriented integral int_0^theta e^{lam s} f(s) ds, accumulated from theta = 0 leftwards
    integ = np.zeros_like(ef)
    integ[:-1] = -np.cumsum((0.5 * h * (ef[1:] + ef[:-1]))[::-1], axis=0)[::-1]
    r = np.exp(-lam * theta)[:, None] * (r0 + integ)
    return M2State(w, r - A2 @ w)


def sandwich_ratios(sys, states, lam=1.0):
    """``||(lam I - A~)^{-1} F xi|| / ||xi||`` for each state ``xi`` in D(A)."""
    out = []
    for xi in states:
        img = tilde_resolvent_apply(sys, F_apply(sys, xi), lam)
        out.append(np.sqrt(m2_inner(img, img) / m2_inner(xi, xi)))
    return np.array(out)


# ---------------------------------------------------------------- semigroups and reachability

def adjoint_semigroup_apply(sys, x, t, N=None):
    """``exp(A* t) x``: recover ``w`` on ``[0, 1]`` through the transposed system, march, map back."""
    if N is not None and x.N != N:
        x = x.resample(N)
    st = transpose_system(sys)
    xi = F_inverse_apply(st, x)
    if t == 0:
        return F_apply(st, xi)
    traj = simulate(st, xi, t, x.N)
    return F_apply(st, semigroup_state(st, traj, t))


def _control_samples(u, T, N, width):
    steps = steps_for(T, N)
    if callable(u):
        u = u(np.linspace(0.0, T, steps + 1))
    u = np.asarray(u, dtype=float).reshape(steps + 1, width)
    return u


def reachability_apply(sys_transposed, u, T, N):
    """``R_T u = int_0^T exp(A t) (B u(t), 0) dt`` for the given (transposed) system.

    Simulated from the zero state under the reversed control ``s -> u(T - s)``.
    """
    st = sys_transposed
    uu = _control_samples(u, T, N, st.m)
    traj = simulate(st, M2State.zeros(st.n, N), T, N, u=uu[::-1])
    return semigroup_state(st, traj, T)


# ---------------------------------------------------------------- random test data

def random_smooth_segment(rng, n, N, modes=4):
    """Random smooth function on ``[-1, 0]`` sampled on ``N + 1`` nodes; independent of ``N`` for a fixed stream."""
    theta = np.linspace(-1.0, 0.0, N + 1)
    a = rng.standard_normal((modes + 1, n)) / (1.0 + np.arange(modes + 1))[:, None]
    b = rng.standard_normal((modes + 1, n)) / (1.0 + np.arange(modes + 1))[:, None]
    k = np.pi * np.arange(modes + 1)
    return np.cos(np.outer(theta, k)) @ a + np.sin(np.outer(theta, k)) @ b


def random_m2_state(rng, n, N, modes=4):
    v = rng.standard_normal(n)
    return M2State(v, random_smooth_segment(rng, n, N, modes))


def random_domain_state(rng, sys, N, modes=4):
    return M2State.from_segment(sys.A_minus1, random_smooth_segment(rng, sys.n, N, modes))


def _random_control(rng, T, N, width, modes=3):
    t = np.linspace(0.0, T, steps_for(T, N) + 1)
    c = rng.standard_normal((2 * modes + 1, width))
    basis = [np.ones_like(t)]
    for k in range(1, modes + 1):
        basis += [np.cos(np.pi * k * t / T), np.sin(np.pi * k * t / T)]
    return np.stack(basis, axis=1) @ c


# ---------------------------------------------------------------- duality identity

@dataclass(frozen=True)
class DualityReport:
    max_residual: float
    residuals: tuple
    seeds: tuple
    T: float
    N: int
    output_kind: str

    def __float__(self):
        return self.max_residual

    def as_dict(self):
        return {
            "max_residual": self.max_residual,
            "residuals": list(self.residuals),
            "trial_seeds": list(self.seeds),
            "T": self.T,
            "N": self.N,
            "output_kind": self.output_kind,
        }


def _trapz_pair(a, b, h):
    s = np.einsum("ka,ka->k", a, b)
    return h * (s.sum() - 0.5 * (s[0] + s[-1]))


def duality_residual(sys, u, x0, T, N, output_kind=None):
    """Relative gap between ``<R_T u, x0>`` (transposed system) and ``<u, K F^{-1} x0>``.

    Normalized by ``||u||_L2 ||K F^{-1} x0||_L2``; zero when that scale vanishes.
    """
    kind = OutputKind(output_kind or sys.output_kind)
    st = transpose_system(sys)
    h = 1.0 / N
    uu = _control_samples(u, T, N, sys.p)
    reach = reachability_apply(st, uu, T, N)
    target = x0 if kind is OutputKind.DELAYED else adjoint_semigroup_apply(st, x0, 1.0, N)
    left = m2_inner(reach, target)
    traj = simulate(sys, F_inverse_apply(sys, x0), T, N)
    y = output_trace(sys, traj, kind)
    right = _trapz_pair(uu, y, h)
    scale = np.sqrt(max(_trapz_pair(uu, uu, h), 0.0) * max(_trapz_pair(y, y, h), 0.0))
    return 0.0 if scale == 0 else float(abs(left - right) / scale)


def verify_duality(sys, T=2.0, trials=10, N=512, seed=0, output_kind=None):
    """Worst relative residual of the duality identity over random smooth controls and states.

    Each trial draws its own seed from ``seed`` so single trials can be replayed.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    kind = OutputKind(output_kind or sys.output_kind)
    seeds = tuple(int(s) for s in np.random.SeedSequence(seed).generate_state(trials))
    res = []
    for s in seeds:
        rng = np.random.default_rng(s)
        u = _random_control(rng, T, N, sys.p)
        x0 = random_m2_state(rng, sys.n, N)
        res.append(duality_residual(sys, u, x0, T, N, kind))
    return DualityReport(float(max(res)), tuple(res), seeds, float(T), int(N), kind.value)


# ---------------------------------------------------------------- observability Gramian

@dataclass(frozen=True, eq=False)
class GramianEstimate:
    """Discrete ``K* K`` on M2 coordinates ``(v, segment nodes)`` with its M2 mass matrix."""

    matrix: np.ndarray
    mass: np.ndarray
    sigma_min: float
    sigma_max: float
    T: float
    N: int

    def as_dict(self):
        return {"T": self.T, "N": self.N, "sigma_min": self.sigma_min, "sigma_max": self.sigma_max,
                "dimension": int(self.matrix.shape[0])}


def observability_gramian(sys, T, N, output_kind=None, cap=4000, domain_only=False):
    """Empirical observability Gramian over ``[0, T]``.

    Every coordinate direction of discrete M2 (head and segment nodes) is
    propagated.  A direction outside D(A) splits into its D(A) projection
    (``v`` reset to ``phi(0) - A_{-1} phi(-1)``) plus a head-only remainder,
    and the pair evolves as a mild solution.  The output energy uses the
    trapezoid rule with one-sided values at jump nodes.
    ``sigma_min``/``sigma_max`` are the extreme generalized eigenvalues against
    the M2 mass matrix.

    With ``domain_only`` the Gramian is restricted to D(A): coordinates are the
    segment nodes alone, ``v`` follows from the compatibility condition and the
    mass matrix is the M2 norm of the completed state.
    """
    kind = OutputKind(output_kind or sys.output_kind)
    n = sys.n
    d = n * (N + 2)
    if d > cap:
        raise CapExceeded(f"discrete dimension {d} exceeds cap {cap}")
    steps = steps_for(T, N)
    h = 1.0 / N
    if domain_only:
        d = n * (N + 1)
        segs = np.eye(d).reshape(N + 1, n, d)
        z = simulate_batch(sys, segs, T, N)
        zl = z
    else:
        eye = np.eye(d)
        heads = eye[:n]
        segs = eye[n:].reshape(N + 1, n, d)
        z, zl = simulate_batch(sys, segs, T, N, heads=heads, both=True)
    lo = 0 if kind is OutputKind.DELAYED else N
    Yp = np.einsum("pa,kad->kpd", sys.C, z[lo : lo + steps + 1])
    Ym = np.einsum("pa,kad->kpd", sys.C, zl[lo : lo + steps + 1])
    G = 0.5 * h * (np.einsum("kpi,kpj->ij", Yp[:-1], Yp[:-1]) + np.einsum("kpi,kpj->ij", Ym[1:], Ym[1:]))
    G = 0.5 * (G + G.T)
    seg_mass = np.diag(np.repeat(trapezoid_weights(N), n))
    if domain_only:
        P = segs[N] - np.einsum("ab,bd->ad", sys.A_minus1, segs[0])
        mass = P.T @ P + seg_mass
    else:
        mass = scipy.linalg.block_diag(np.eye(n), seg_mass)
    ev = scipy.linalg.eigh(G, mass, eigvals_only=True)
    return GramianEstimate(G, mass, float(ev[0]), float(ev[-1]), float(T), int(N))
