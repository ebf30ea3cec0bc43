"""System description, pivot-space states and the characteristic matrix.

The systems handled here have the form

    z'(t) = A_{-1} z'(t-1) + D_1 z(t-1)
            + int_{-1}^0 [A_2(s) z'(t+s) + A_3(s) z(t+s)] ds + B u(t),

with the delay normalized to one.  ``D_1`` is an optional pointwise
state-delay term (zero by default).  A state of the abstract model lives in
M2 = R^n x L2(-1, 0; R^n) and is stored as a head vector plus a segment sampled
on a uniform grid of ``N + 1`` nodes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import factorial

import numpy as np

__all__ = [
    "OutputKind",
    "Kernel",
    "ZeroKernel",
    "ConstantKernel",
    "SampledKernel",
    "NeutralSystem",
    "M2State",
    "ComplexRegion",
    "validate_system",
    "transpose_system",
    "delta_matrix",
    "in_domain",
    "m2_inner",
    "m2_norm",
    "trapezoid_weights",
    "phi1",
]


class OutputKind(str, enum.Enum):
    CURRENT = "current"
    DELAYED = "delayed"


# ---------------------------------------------------------------------------
# Entire functions used by the exponential integrals
# ---------------------------------------------------------------------------

_SERIES_RADIUS = 0.5
_SERIES_TERMS = 24
_PHI1_COEF = np.array([1.0 / factorial(k + 1) for k in range(_SERIES_TERMS)])
_PHI2_COEF = np.array([1.0 / (factorial(k) * (k + 2)) for k in range(_SERIES_TERMS)])


def _series(z, coef):
    out = np.zeros_like(z)
    for c in coef[::-1]:
        out = out * z + c
    return out


def phi1(z):
    """(e^z - 1)/z, with the removable singularity at 0 filled in."""
    z = np.asarray(z, dtype=complex)
    # complex expm1 keeps full relative accuracy, so only a tiny disc needs the Taylor form
    small = np.abs(z) < 1e-5
    out = np.empty_like(z)
    zs = z[small]
    out[small] = 1.0 + zs * (0.5 + zs / 6.0)
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def _phi2(z):
    # int_0^1 t e^{zt} dt = (z e^z - (e^z - 1)) / z^2
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SERIES_RADIUS
    out = np.empty_like(z)
    if small.any():
        out[small] = _series(z[small], _PHI2_COEF)
    zb = z[~small]
    out[~small] = (zb * np.exp(zb) - np.expm1(zb)) / zb**2
    return out


def trapezoid_weights(N, length=1.0):
    """Composite trapezoid weights on ``N + 1`` uniform nodes."""
    w = np.full(N + 1, length / N)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


class Kernel:
    """Matrix-valued function on [-1, 0]."""

    def nodes(self, N, n):
        """Values on the uniform grid ``-1, -1 + 1/N, ..., 0``; shape (N+1, n, n)."""
        raise NotImplementedError

    def laplace(self, lam, n):
        """``int_{-1}^0 e^{lam s} K(s) ds`` for an array of ``lam``; shape lam.shape + (n, n)."""
        raise NotImplementedError

    def transpose(self):
        raise NotImplementedError

    @property
    def is_zero(self):
        return False


@dataclass(frozen=True, eq=False)
class ZeroKernel(Kernel):
    def nodes(self, N, n):
        return np.zeros((N + 1, n, n))

    def laplace(self, lam, n):
        lam = np.asarray(lam, dtype=complex)
        return np.zeros(lam.shape + (n, n), dtype=complex)

    def transpose(self):
        return self

    @property
    def is_zero(self):
        return True

    def __eq__(self, other):
        return isinstance(other, ZeroKernel)

    def __hash__(self):
        return 0


@dataclass(frozen=True, eq=False)
class ConstantKernel(Kernel):
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.atleast_2d(np.asarray(self.matrix, dtype=float)))

    def nodes(self, N, n):
        return np.broadcast_to(self.matrix, (N + 1,) + self.matrix.shape).copy()

    def laplace(self, lam, n):
        lam = np.asarray(lam, dtype=complex)
        # int_{-1}^0 e^{lam s} ds = (1 - e^{-lam}) / lam = phi1(-lam)
        return phi1(-lam)[..., None, None] * self.matrix

    def transpose(self):
        return ConstantKernel(self.matrix.T.copy())

    def __eq__(self, other):
        return isinstance(other, ConstantKernel) and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SampledKernel(Kernel):
    """Piecewise-linear kernel through ``values[j] = K(-1 + j/N)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None, None]
        object.__setattr__(self, "values", v)

    @property
    def N(self):
        return self.values.shape[0] - 1

    @property
    def grid(self):
        return np.linspace(-1.0, 0.0, self.N + 1)

    def nodes(self, N, n):
        if N == self.N:
            return self.values.copy()
        theta = np.linspace(-1.0, 0.0, N + 1)
        return self.at(theta)

    def at(self, theta):
        """Linear interpolation at arbitrary points of [-1, 0]."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        pos = np.clip((theta + 1.0) * self.N, 0.0, self.N)
        j = np.minimum(np.floor(pos).astype(int), self.N - 1)
        frac = (pos - j)[:, None, None]
        return (1.0 - frac) * self.values[j] + frac * self.values[j + 1]

    def panel_weights(self, lam):
        """Weights ``c_j(lam)`` with ``int e^{lam s} K(s) ds = sum_j c_j K_j`` exactly."""
        lam = np.asarray(lam, dtype=complex)
        N = self.N
        h = 1.0 / N
        z = lam * h
        p1 = phi1(z)
        p2 = _phi2(z)
        left = h * (p1 - p2)
        right = h * p2
        starts = -1.0 + h * np.arange(N)
        e = np.exp(lam[..., None] * starts)
        w = np.zeros(lam.shape + (N + 1,), dtype=complex)
        w[..., :N] += e * left[..., None]
        w[..., 1:] += e * right[..., None]
        return w

    def laplace(self, lam, n):
        w = self.panel_weights(lam)
        return np.einsum("...j,jab->...ab", w, self.values)

    def transpose(self):
        return SampledKernel(np.swapaxes(self.values, 1, 2).copy())

    def __eq__(self, other):
        return isinstance(other, SampledKernel) and np.array_equal(self.values, other.values)

    __hash__ = None


# ---------------------------------------------------------------------------
# System
# ---------------------------------------------------------------------------


def _as_matrix(a):
    return np.atleast_2d(np.asarray(a, dtype=float))


@dataclass(frozen=True, eq=False)
class NeutralSystem:
    """Linear neutral system with unit delay.

    Construction only coerces arrays; call :func:`validate_system` to check
    dimensional consistency.
    """

    A_minus1: np.ndarray
    B: np.ndarray
    C: np.ndarray
    A2: Kernel = field(default_factory=ZeroKernel)
    A3: Kernel = field(default_factory=ZeroKernel)
    D1: np.ndarray | None = None
    output_kind: OutputKind = OutputKind.DELAYED

    def __post_init__(self):
        A = _as_matrix(self.A_minus1)
        object.__setattr__(self, "A_minus1", A)
        object.__setattr__(self, "B", _as_matrix(self.B))
        object.__setattr__(self, "C", _as_matrix(self.C))
        d1 = np.zeros_like(A) if self.D1 is None else _as_matrix(self.D1)
        object.__setattr__(self, "D1", d1)
        object.__setattr__(self, "output_kind", OutputKind(self.output_kind))

    @property
    def n(self):
        return self.A_minus1.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def uses_d1(self):
        return bool(np.any(self.D1 != 0))

    def with_output(self, kind):
        return NeutralSystem(self.A_minus1, self.B, self.C, self.A2, self.A3, self.D1, kind)

    def __eq__(self, other):
        if not isinstance(other, NeutralSystem):
            return NotImplemented
        return (
            np.array_equal(self.A_minus1, other.A_minus1)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.C, other.C)
            and np.array_equal(self.D1, other.D1)
            and self.A2 == other.A2
            and self.A3 == other.A3
            and self.output_kind == other.output_kind
        )

    __hash__ = None


def _kernel_problems(name, kernel, n):
    out = []
    if isinstance(kernel, ConstantKernel):
        if kernel.matrix.shape != (n, n):
            out.append(f"{name}: constant kernel has shape {kernel.matrix.shape}, expected {(n, n)}")
    elif isinstance(kernel, SampledKernel):
        v = kernel.values
        if v.ndim != 3 or v.shape[1:] != (n, n):
            out.append(f"{name}: sampled kernel values have shape {v.shape}, expected (N+1, {n}, {n})")
        if v.shape[0] < 3:
            out.append(f"{name}: sampled kernel needs N >= 2 (at least 3 nodes), got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            out.append(f"{name}: sampled kernel has non-finite values")
    elif not isinstance(kernel, ZeroKernel):
        out.append(f"{name}: unsupported kernel type {type(kernel).__name__}")
    return out


def validate_system(sys):
    """Return a list of human-readable problems; empty when the system is well formed."""
    problems = []
    A = sys.A_minus1
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        problems.append(f"A_minus1 must be square, got shape {A.shape}")
        return problems
    n = A.shape[0]
    if sys.D1.shape != (n, n):
        problems.append(f"D1 has shape {sys.D1.shape}, expected {(n, n)}")
    if sys.B.shape[0] != n:
        problems.append(f"B has {sys.B.shape[0]} rows, expected {n}")
    if sys.C.shape[1] != n:
        problems.append(f"C has {sys.C.shape[1]} columns, expected {n}")
    problems += _kernel_problems("A2", sys.A2, n)
    problems += _kernel_problems("A3", sys.A3, n)
    for name in ("A_minus1", "B", "C", "D1"):
        if not np.all(np.isfinite(getattr(sys, name))):
            problems.append(f"{name} has non-finite entries")
    return problems


def transpose_system(sys):
    """The transposed system: every matrix and kernel transposed, ``B`` and ``C`` swapped."""
    return NeutralSystem(
        A_minus1=sys.A_minus1.T.copy(),
        B=sys.C.T.copy(),
        C=sys.B.T.copy(),
        A2=sys.A2.transpose(),
        A3=sys.A3.transpose(),
        D1=sys.D1.T.copy(),
        output_kind=sys.output_kind,
    )


def delta_matrix(sys, lam):
    """Characteristic matrix at ``lam`` (scalar or array).

    ``Delta(lam) = lam I - lam e^{-lam} A_{-1} - e^{-lam} D_1
    - int_{-1}^0 e^{lam s} [lam A_2(s) + A_3(s)] ds``.
    """
    lam_arr = np.asarray(lam, dtype=complex)
    n = sys.n
    eye = np.eye(n)
    A = sys.A_minus1
    lb = lam_arr[..., None, None]
    # lam (I - e^{-lam} A) written with expm1 so that A = I keeps full accuracy near 2 pi i k
    out = lb * ((eye - A) - np.expm1(-lb) * A)
    if sys.uses_d1:
        out = out - np.exp(-lb) * sys.D1
    if not sys.A2.is_zero:
        out = out - lb * sys.A2.laplace(lam_arr, n)
    if not sys.A3.is_zero:
        out = out - sys.A3.laplace(lam_arr, n)
    return out


# ---------------------------------------------------------------------------
# Pivot-space states
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class M2State:
    """Element ``(v, phi)`` of M2 with ``phi`` sampled at ``-1 + j/N``.

    ``dseg_minus`` / ``dseg_plus`` optionally carry left/right derivative
    samples of the segment.  They let trajectories be restarted or mapped
    without re-differentiating the samples; when absent, consumers use the
    panel slopes of the piecewise-linear interpolant.
    """

    v: np.ndarray
    segment: np.ndarray
    dseg_minus: np.ndarray | None = None
    dseg_plus: np.ndarray | None = None

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        seg = np.asarray(self.segment, dtype=float)
        if seg.ndim == 1:
            seg = seg[:, None]
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "segment", seg)
        for name in ("dseg_minus", "dseg_plus"):
            d = getattr(self, name)
            if d is not None:
                d = np.asarray(d, dtype=float)
                object.__setattr__(self, name, d[:, None] if d.ndim == 1 else d)
        if self.dseg_minus is None and self.dseg_plus is not None:
            object.__setattr__(self, "dseg_minus", self.dseg_plus)
        if self.dseg_plus is None and self.dseg_minus is not None:
            object.__setattr__(self, "dseg_plus", self.dseg_minus)

    @property
    def n(self):
        return self.segment.shape[1]

    @property
    def N(self):
        return self.segment.shape[0] - 1

    @property
    def h(self):
        return 1.0 / self.N

    @property
    def grid(self):
        return np.linspace(-1.0, 0.0, self.N + 1)

    @property
    def has_derivative(self):
        return self.dseg_plus is not None

    def slopes(self):
        """Left and right derivative samples (carried ones, else panel slopes)."""
        if self.has_derivative:
            return self.dseg_minus, self.dseg_plus
        s = np.diff(self.segment, axis=0) * self.N
        dm = np.vstack([s[:1], s])
        dp = np.vstack([s, s[-1:]])
        return dm, dp

    def as_vector(self):
        return np.concatenate([self.v, self.segment.ravel()])

    def without_derivative(self):
        return M2State(self.v, self.segment)

    def __add__(self, other):
        return _combine(1.0, self, 1.0, other)

    def __sub__(self, other):
        return _combine(1.0, self, -1.0, other)

    def __mul__(self, a):
        return _combine(float(a), self, 0.0, self)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, n, N):
        return cls(np.zeros(n), np.zeros((N + 1, n)))

    @classmethod
    def from_segment(cls, A_minus1, segment):
        """Compatible state: ``v = phi(0) - A_{-1} phi(-1)``."""
        seg = np.asarray(segment, dtype=float)
        if seg.ndim == 1:
            seg = seg[:, None]
        A = np.atleast_2d(np.asarray(A_minus1, dtype=float))
        return cls(seg[-1] - A @ seg[0], seg)

    @classmethod
    def from_function(cls, A_minus1, fn, N):
        """Sample ``fn(theta) -> (len(theta), n)`` and attach the compatible head."""
        theta = np.linspace(-1.0, 0.0, N + 1)
        return cls.from_segment(A_minus1, np.asarray(fn(theta), dtype=float).reshape(N + 1, -1))

    def resample(self, N):
        """Linear resampling of the segment onto a grid with ``N`` panels."""
        if N == self.N:
            return self
        theta = np.linspace(-1.0, 0.0, N + 1)
        seg = np.column_stack([np.interp(theta, self.grid, self.segment[:, i]) for i in range(self.n)])
        return M2State(self.v, seg)


def _combine(a, x, b, y):
    if x.segment.shape != y.segment.shape:
        raise ValueError("states live on different grids")
    dm = dp = None
    if b == 0.0:
        if x.has_derivative:
            dm, dp = a * x.dseg_minus, a * x.dseg_plus
    elif x.has_derivative and y.has_derivative:
        dm = a * x.dseg_minus + b * y.dseg_minus
        dp = a * x.dseg_plus + b * y.dseg_plus
    return M2State(a * x.v + b * y.v, a * x.segment + b * y.segment, dm, dp)


def m2_inner(x, y):
    """Discrete M2 inner product: head dot product plus trapezoid on the segment."""
    if x.segment.shape != y.segment.shape:
        raise ValueError("states live on different grids")
    w = trapezoid_weights(x.N)
    return float(x.v @ y.v + np.einsum("j,ji,ji->", w, x.segment, y.segment))


def m2_norm(x):
    return float(np.sqrt(max(m2_inner(x, x), 0.0)))


def domain_tolerance(x):
    return 1e-8 * (1.0 + float(np.max(np.abs(x.segment))) if x.segment.size else 1.0)


def in_domain(sys, x, tol=None, slope_bound=1e6):
    """Membership in D(A): compatible head and bounded difference quotients.

    ``tol`` defaults to ``1e-8 * (1 + max|segment|)``.  The slope bound is a
    finite-grid stand-in for H^1 regularity.
    """
    if x.n != sys.n:
        return False
    if tol is None:
        tol = domain_tolerance(x)
    seg = x.segment
    gap = x.v - seg[-1] + sys.A_minus1 @ seg[0]
    if np.linalg.norm(gap) > tol:
        return False
    quotients = np.abs(np.diff(seg, axis=0)) * x.N
    return bool(quotients.size == 0 or quotients.max() <= slope_bound)


# ---------------------------------------------------------------------------
# Search region
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexRegion:
    """Closed axis-aligned rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    max_depth: int = 48
    contour_samples: int = 64

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("region needs re_min < re_max and im_min < im_max")
        if self.contour_samples < 64:
            raise ValueError("contour_samples must be at least 64")

    @property
    def width(self):
        return self.re_max - self.re_min

    @property
    def height(self):
        return self.im_max - self.im_min

    @property
    def diameter(self):
        return float(np.hypot(self.width, self.height))

    @property
    def center(self):
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    def contains(self, lam, pad=0.0):
        return (
            self.re_min - pad <= lam.real <= self.re_max + pad
            and self.im_min - pad <= lam.imag <= self.im_max + pad
        )

    def with_bounds(self, re_min, re_max, im_min, im_max):
        return ComplexRegion(re_min, re_max, im_min, im_max, self.max_depth, self.contour_samples)

    def as_dict(self):
        return {
            "re_min": self.re_min,
            "re_max": self.re_max,
            "im_min": self.im_min,
            "im_max": self.im_max,
            "max_depth": self.max_depth,
            "contour_samples": self.contour_samples,
        }
