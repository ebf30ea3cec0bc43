"""Rank-based decision procedures for exact/approximate controllability and observability.

All checks are finite: the "for every lambda" conditions are reduced to the
eigenvalues of ``A_minus1`` (where ``lambda I - A_minus1`` can lose rank) and
to the zeros of ``det Delta`` found inside a bounded search region (where
``Delta(lambda)`` can lose rank).  Positive answers are therefore reported as
``YesOnRegion``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ContourHit, Uncontrollable
from .model import ComplexRegion, OutputKind, delta_matrix, transpose_system
from .spectral import chain_real_parts, eigenvalues_in_region

__all__ = [
    "Property",
    "Holds",
    "Failure",
    "Verdict",
    "Tolerances",
    "DEFAULT_REGION",
    "matrix_rank",
    "controllability_index",
    "check_exact_controllability",
    "check_exact_observability",
    "check_approx_observability",
]

# deliberately off-centre bounds, so that symmetric spectra do not sit on the contour
DEFAULT_REGION = ComplexRegion(-2.013, 2.017, -20.03, 19.97)


class Property(str, enum.Enum):
    EXACT_CONTROLLABILITY = "ExactControllability"
    EXACT_OBSERVABILITY = "ExactObservability"
    APPROX_OBSERVABILITY = "ApproxObservability"


class Holds(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    YES_ON_REGION = "YesOnRegion"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Tolerances:
    rank: float = 1e-10
    det: float = 1e-12
    root: float = 1e-10
    root_floor: float = 1e-6

    def as_dict(self):
        return {"rank": self.rank, "det": self.det, "root": self.root, "root_floor": self.root_floor}


@dataclass(frozen=True)
class Failure:
    condition: str
    witness: object
    rank: int | None
    message: str = ""

    def as_dict(self):
        w = self.witness
        if isinstance(w, complex):
            w = {"re": w.real, "im": w.imag}
        elif isinstance(w, np.ndarray):
            w = w.tolist()
        return {"condition": self.condition, "witness": w, "rank": self.rank, "message": self.message}


@dataclass(frozen=True)
class Verdict:
    property: Property
    holds: Holds
    failures: tuple = ()
    minimal_time: float | None = None
    region: ComplexRegion | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    d1_extension_used: bool = False
    roots: tuple = ()
    chain_real_parts: tuple = ()

    @property
    def exit_code(self):
        return {Holds.YES: 0, Holds.YES_ON_REGION: 0, Holds.NO: 1, Holds.INCONCLUSIVE: 2}[self.holds]

    def as_dict(self):
        return {
            "property": self.property.value,
            "holds": self.holds.value,
            "failures": [f.as_dict() for f in self.failures],
            "minimal_time": self.minimal_time,
            "minimal_time_strict": self.minimal_time is not None,
            "region": None if self.region is None else self.region.as_dict(),
            "tolerances": self.tolerances.as_dict(),
            "d1_extension_used": self.d1_extension_used,
            "roots_checked": [
                {"re": r.lam.real, "im": r.lam.imag, "multiplicity": r.multiplicity} for r in self.roots
            ],
            "chain_real_parts": list(self.chain_real_parts),
        }


def matrix_rank(M, tol=1e-10):
    """Numerical rank: number of singular values above ``tol * sigma_max * max(M.shape)``."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0] * max(M.shape)))


def _orth(X, tol):
    if X.shape[1] == 0:
        return X
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    return U[:, s > tol]


def controllability_index(A, B, tol=1e-10):
    """Smallest ``k`` with ``rank [B, AB, ..., A^(k-1) B] = n``.

    The Krylov space is grown one block at a time from an orthonormal basis;
    each new block is orthogonalized twice against the basis before its rank
    contribution is read off.

    Raises
    ------
    Uncontrollable
        If the rank stalls below ``n``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n = A.shape[0]
    scale = max(1.0, np.linalg.norm(A, 2))
    b_norm = np.linalg.norm(B, 2)
    if b_norm == 0:
        raise Uncontrollable("B is zero", rank=0)
    basis = _orth(B / b_norm, tol * max(B.shape))
    newest = basis
    k = 1
    while basis.shape[1] < n:
        if newest.shape[1] == 0 or k >= n:
            raise Uncontrollable(f"Krylov rank saturates at {basis.shape[1]} < {n}", rank=basis.shape[1])
        cand = A @ newest / scale
        for _ in range(2):
            cand = cand - basis @ (basis.T @ cand)
        newest = _orth(cand, tol * n)
        if newest.shape[1]:
            for _ in range(2):
                newest = newest - basis @ (basis.T @ newest)
            newest, _ = np.linalg.qr(newest)
        basis = np.hstack([basis, newest])
        k += 1
    return k


def _block_rank(M, B, tol):
    # normalize each block so that scaling B (or Delta) cannot move the rank
    parts = []
    for X in (M, B):
        nx = np.linalg.norm(X, 2)
        parts.append(X / nx if nx > 0 else X)
    return matrix_rank(np.hstack(parts), tol)


def _floored_delta(sys, lam, floor):
    """Delta(lam) with the singular values that only reflect root-location error removed."""
    D = delta_matrix(sys, lam)
    step = 1e-6 * (1.0 + abs(lam))
    dD = (delta_matrix(sys, lam + step) - delta_matrix(sys, lam - step)) / (2 * step)
    U, s, Vh = np.linalg.svd(D)
    s = np.where(s < floor * (1.0 + np.linalg.norm(dD, 2)), 0.0, s)
    return (U * s) @ Vh


def _distinct(values, tol=1e-8):
    out = []
    for v in sorted(np.asarray(values, dtype=complex), key=lambda c: (c.real, c.imag)):
        if not out or min(abs(v - o) for o in out) > tol * (1 + abs(v)):
            out.append(complex(v))
    return out


def _roots(sys, region, tol):
    """Zeros of det Delta in ``region``; the box is nudged inward if a zero sits on its edge."""
    box = region
    for attempt in range(6):
        try:
            return box, tuple(eigenvalues_in_region(sys, box, tol=tol.root))
        except ContourHit:
            shrink = 1e-3 * (attempt + 1) * (1 + 0.37 * attempt)
            box = region.with_bounds(
                region.re_min + shrink, region.re_max - 0.7 * shrink,
                region.im_min + 1.3 * shrink, region.im_max - shrink,
            )
    return box, tuple(eigenvalues_in_region(sys, box, tol=tol.root))


def _sort_failures(failures):
    def key(f):
        w = f.witness
        return (f.condition, w.real, w.imag) if isinstance(w, complex) else (f.condition, 0.0, 0.0)
    return tuple(sorted(failures, key=key))


def _pbh_failures(A, B, tol, label):
    n = A.shape[0]
    out = []
    for mu in _distinct(np.linalg.eigvals(A)):
        r = _block_rank(mu * np.eye(n) - A, B, tol.rank)
        if r < n:
            out.append(Failure(label, mu, r, "rank [lambda I - A_minus1, B] < n"))
    return out


def _delta_failures(sys, roots, B, tol, label):
    n = sys.n
    out = []
    for root in roots:
        r = _block_rank(_floored_delta(sys, root.lam, tol.root_floor), B, tol.rank)
        if r < n:
            out.append(Failure(label, root.lam, r, "rank [Delta(lambda), B] < n at an eigenvalue"))
    return out


def _controllability(sys, region, tol, prop):
    region = DEFAULT_REGION if region is None else region
    B = np.asarray(sys.B, dtype=float)
    box, roots = _roots(sys, region, tol)
    failures = _delta_failures(sys, roots, B, tol, "i") + _pbh_failures(sys.A_minus1, B, tol, "ii")
    minimal_time = None
    try:
        minimal_time = float(controllability_index(sys.A_minus1, B, tol.rank))
    except Uncontrollable as exc:
        failures.append(Failure("iii", None, exc.rank, "controllability index of (A_minus1, B) is infinite"))
    return Verdict(
        property=prop,
        holds=Holds.NO if failures else Holds.YES_ON_REGION,
        failures=_sort_failures(failures),
        minimal_time=None if failures else minimal_time,
        region=box,
        tolerances=tol,
        d1_extension_used=sys.uses_d1,
        roots=roots,
        chain_real_parts=tuple(chain_real_parts(sys)),
    )


def check_exact_controllability(sys, region=None, tol=None):
    """Exact controllability of the controlled neutral system on ``[0, T]``, ``T > minimal_time``.

    Condition (i) is ``rank [Delta(lam), B] = n`` at every zero of ``det Delta`` in
    ``region``; condition (ii) is ``rank [lam I - A_minus1, B] = n`` at every
    eigenvalue of ``A_minus1``.  ``minimal_time`` is the controllability index of
    ``(A_minus1, B)``, a strict lower bound on the horizon.
    """
    tol = Tolerances() if tol is None else _tolerances(tol)
    return _controllability(sys, region, tol, Property.EXACT_CONTROLLABILITY)


def _tolerances(tol):
    if isinstance(tol, Tolerances):
        return tol
    return Tolerances(rank=float(tol))


def check_exact_observability(sys, region=None, tol=None, output_kind=None):
    """Exact observability through the output ``C z(t)`` (current) or ``C z(t-1)`` (delayed).

    Decided by duality as exact controllability of the transposed system
    (input ``C^T``).  The current output additionally needs ``A_minus1``
    invertible.
    """
    tol = Tolerances() if tol is None else _tolerances(tol)
    kind = OutputKind(output_kind or sys.output_kind)
    v = _controllability(transpose_system(sys), region, tol, Property.EXACT_OBSERVABILITY)
    if kind is OutputKind.CURRENT:
        det = float(abs(np.linalg.det(sys.A_minus1)))
        if det <= tol.det:
            guard = Failure("det_guard", det, None, "undelayed output requires invertible A_minus1")
            return Verdict(
                property=v.property, holds=Holds.NO, failures=_sort_failures(v.failures + (guard,)),
                minimal_time=None, region=v.region, tolerances=tol, d1_extension_used=sys.uses_d1,
                roots=v.roots, chain_real_parts=v.chain_real_parts,
            )
    return Verdict(
        property=v.property, holds=v.holds, failures=v.failures, minimal_time=v.minimal_time,
        region=v.region, tolerances=tol, d1_extension_used=sys.uses_d1,
        roots=v.roots, chain_real_parts=v.chain_real_parts,
    )


def check_approx_observability(sys, region=None, tol=None, output_kind=None):
    """Sufficient test for approximate observability.

    Condition 1: ``rank [Delta^T(lam), C^T] = n`` at the zeros in ``region``.
    Condition 2: ``rank [A_minus1^T, C^T] = n``.  Condition 1 is also necessary,
    so its failure gives ``No``; a failure of condition 2 alone gives
    ``Inconclusive``.
    """
    tol = Tolerances() if tol is None else _tolerances(tol)
    region = DEFAULT_REGION if region is None else region
    kind = OutputKind(output_kind or sys.output_kind)
    st = transpose_system(sys)
    Ct = np.asarray(st.B, dtype=float)
    box, roots = _roots(st, region, tol)
    cond1 = _delta_failures(st, roots, Ct, tol, "1")
    failures = list(cond1)
    r2 = _block_rank(st.A_minus1, Ct, tol.rank)
    if r2 < sys.n:
        failures.append(Failure("2", None, r2, "rank [A_minus1^T, C^T] < n (sufficient condition only)"))
    if cond1:
        holds = Holds.NO
    elif failures:
        holds = Holds.INCONCLUSIVE
    else:
        holds = Holds.YES_ON_REGION
    if kind is OutputKind.CURRENT and holds is Holds.YES_ON_REGION:
        det = float(abs(np.linalg.det(sys.A_minus1)))
        if det <= tol.det:
            failures.append(Failure("det_guard", det, None, "current output with singular A_minus1 is not covered"))
            holds = Holds.INCONCLUSIVE
    return Verdict(
        property=Property.APPROX_OBSERVABILITY, holds=holds, failures=_sort_failures(failures),
        minimal_time=None, region=box, tolerances=tol, d1_extension_used=sys.uses_d1,
        roots=roots, chain_real_parts=tuple(chain_real_parts(st)),
    )
