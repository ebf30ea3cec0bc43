"""Eigenvalues of the neutral system: zeros of det Delta inside rectangles.

Counting uses the argument principle on the rectangle boundary with adaptive
sampling.  Localization is recursive subdivision driven by those counts, so
the multiplicities returned always add up to the count of the whole region.
Each isolated box is then polished by Newton's method (the multiplicity-aware
variant for clusters).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContourHit, MaxDepthExceeded
from .model import ComplexRegion, delta_matrix

__all__ = [
    "Root",
    "char_det",
    "winding_count",
    "eigenvalues_in_region",
    "chain_seeds",
    "DEFAULT_CONTOUR_FLOOR",
]

DEFAULT_CONTOUR_FLOOR = 1e-12
_MAX_PHASE_STEP = 0.4
_SPLIT_FRACTIONS = (0.5123, 0.4731, 0.5389, 0.4417, 0.5671)


@dataclass(frozen=True)
class Root:
    lam: complex
    multiplicity: int
    residual: float
    history: tuple = field(default=(), compare=False, repr=False)


def char_det(sys, lam):
    """det Delta(lam), computed by LU with partial pivoting; vectorized over ``lam``."""
    return np.linalg.det(delta_matrix(sys, lam))


def _floor(lam, n, contour_floor):
    return contour_floor * (1.0 + np.abs(lam) ** n)


def _boundary(box, s):
    """Counter-clockwise boundary point for the parameter s in [0, 4)."""
    a, b, c, d = box.re_min, box.re_max, box.im_min, box.im_max
    s = np.asarray(s, dtype=float)
    edge = np.minimum(np.floor(s).astype(int), 3)
    f = s - edge
    re = np.select([edge == 0, edge == 1, edge == 2, edge == 3], [a + f * (b - a), b, b - f * (b - a), a])
    im = np.select([edge == 0, edge == 1, edge == 2, edge == 3], [c, c + f * (d - c), d, d - f * (d - c)])
    return re + 1j * im


def _initial_params(box, samples):
    # distribute samples along the edges in proportion to their length, at least 8 each
    lengths = np.array([box.width, box.height, box.width, box.height])
    counts = np.maximum(8, np.round(samples * lengths / lengths.sum()).astype(int))
    return np.concatenate([e + np.arange(k) / k for e, k in enumerate(counts)])


def _winding_once(sys, box, samples, contour_floor, max_refine=40):
    """Phase increment of det Delta around ``box`` in turns, with the number of evaluations used.

    Each segment is checked against its midpoint; the lookahead exposes steps
    that wrap by a full turn and look small.  Rejected segments are halved.
    """
    n = sys.n

    def f(s):
        pts = _boundary(box, s)
        vals = char_det(sys, pts)
        small = np.abs(vals) < _floor(pts, n, contour_floor)
        if np.any(small):
            hit = complex(pts[np.argmax(small)])
            raise ContourHit(f"|det Delta| below floor on the contour near {hit:.6g}", point=hit)
        return vals

    a = _initial_params(box, samples)
    fa = f(a)
    b = np.append(a[1:], 4.0)
    fb = np.append(fa[1:], fa[:1])
    total = 0.0
    used = a.size
    for _ in range(max_refine):
        m = 0.5 * (a + b)
        fm = f(m)
        used += m.size
        d1 = np.angle(fm / fa)
        d2 = np.angle(fb / fm)
        full = np.angle(fb / fa)
        mag = np.maximum(np.abs(np.log(np.abs(fm / fa))), np.abs(np.log(np.abs(fb / fm))))
        bad = (np.abs(d1) > _MAX_PHASE_STEP) | (np.abs(d2) > _MAX_PHASE_STEP) | (np.abs(d1 + d2 - full) > 1e-3) | (mag > 0.7)
        total += (d1 + d2)[~bad].sum()
        if not np.any(bad):
            return total / (2 * np.pi), used
        a, fa, m, fm, b, fb = a[bad], fa[bad], m[bad], fm[bad], b[bad], fb[bad]
        a, fa, b, fb = np.concatenate([a, m]), np.concatenate([fa, fm]), np.concatenate([m, b]), np.concatenate([fm, fb])
    raise ContourHit("phase refinement did not settle; a root sits too close to the contour")


def winding_count(sys, region, contour_floor=DEFAULT_CONTOUR_FLOOR):
    """Number of zeros of det Delta inside ``region``, counted with multiplicity.

    Raises
    ------
    ContourHit
        When |det Delta| falls below ``contour_floor * (1 + |lam|^n)`` on the contour.
    """
    samples = region.contour_samples
    w, used = _winding_once(sys, region, samples, contour_floor)
    count = int(round(w))
    # doubling check: the integer must survive a finer starting mesh
    for _ in range(6):
        w2, _ = _winding_once(sys, region, 2 * samples, contour_floor)
        c2 = int(round(w2))
        if c2 == count and abs(w - count) < 0.05 and abs(w2 - c2) < 0.05:
            return count
        samples *= 2
        w, count = w2, c2
    raise ContourHit("winding number did not stabilize under sample doubling")
    return count


def _split(box, frac):
    if box.width > 2 * box.height:
        x = box.re_min + frac * box.width
        return [box.with_bounds(box.re_min, x, box.im_min, box.im_max),
                box.with_bounds(x, box.re_max, box.im_min, box.im_max)]
    if box.height > 2 * box.width:
        y = box.im_min + frac * box.height
        return [box.with_bounds(box.re_min, box.re_max, box.im_min, y),
                box.with_bounds(box.re_min, box.re_max, y, box.im_max)]
    x = box.re_min + frac * box.width
    y = box.im_min + (1 - frac) * box.height
    return [
        box.with_bounds(box.re_min, x, box.im_min, y),
        box.with_bounds(x, box.re_max, box.im_min, y),
        box.with_bounds(box.re_min, x, y, box.im_max),
        box.with_bounds(x, box.re_max, y, box.im_max),
    ]


def _children(sys, box, count, contour_floor):
    last = None
    for frac in _SPLIT_FRACTIONS:
        kids = _split(box, frac)
        try:
            counts = [winding_count(sys, k, contour_floor) for k in kids]
        except ContourHit as exc:
            last = exc
            continue
        if sum(counts) == count:
            return list(zip(kids, counts))
    raise last or ContourHit("subdivision counts disagree with the parent box")


def _newton(sys, lam0, mult, tol, max_iter=60):
    """Multiplicity-aware Newton on det Delta; the residual history is strictly decreasing."""
    n = sys.n
    lam = complex(lam0)
    f = complex(char_det(sys, lam))
    history = [abs(f)]
    for _ in range(max_iter):
        if f == 0:
            break
        step_h = 1e-6 * (1.0 + abs(lam))
        df = complex((char_det(sys, lam + step_h) - char_det(sys, lam - step_h)) / (2 * step_h))
        if df == 0:
            break
        step = mult * f / df
        # backtrack until the residual drops; far from a root the full step can overshoot
        for _ in range(30):
            cand = lam - step
            fc = complex(char_det(sys, cand))
            if abs(fc) < history[-1]:
                break
            step *= 0.5
        else:
            break
        lam, f = cand, fc
        history.append(abs(f))
        if abs(step) <= 1e-15 * (1.0 + abs(lam)):
            break
    return lam, abs(f), tuple(history)


def _try_cluster(sys, box, count, tol, contour_floor, cluster_size):
    """Accept a multiple zero when modified Newton lands on a point whose small box holds all ``count`` zeros."""
    lam, res, hist = _newton(sys, box.center, count, tol)
    # the box must be wide enough that |det| ~ r^count stays well above the floor on its edge
    r = max(0.5 * cluster_size, (1e4 * _floor(lam, sys.n, contour_floor)) ** (1.0 / count))
    if r > 0.25 * min(box.width, box.height) or not box.contains(lam, pad=-r):
        return None
    small = box.with_bounds(lam.real - r, lam.real + r, lam.imag - r, lam.imag + r)
    try:
        if winding_count(sys, small, contour_floor) != count:
            return None
    except ContourHit:
        return None
    return Root(complex(lam), int(count), float(res), hist)


def residual_tolerance(lam, n, tol):
    return tol * (1.0 + abs(lam)) ** n


def eigenvalues_in_region(sys, region, tol=1e-10, contour_floor=DEFAULT_CONTOUR_FLOOR,
                          cluster_size=1e-3):
    """Roots of det Delta inside ``region`` with box-level multiplicities.

    ``tol`` is relative: a root is accepted when
    ``|det Delta(lam)| <= tol * (1 + |lam|)^n``.  Boxes holding several zeros
    are subdivided until they shrink below ``cluster_size``; what remains is
    reported as one root of the counted multiplicity.  Roots come back sorted
    by (Re, Im).
    """
    total = winding_count(sys, region, contour_floor)
    stack = [(region, total, 0)]
    roots = []
    while stack:
        box, count, depth = stack.pop()
        if count == 0:
            continue
        if count >= 2 and box.diameter >= cluster_size:
            found = _try_cluster(sys, box, count, tol, contour_floor, cluster_size)
            if found is not None:
                roots.append(found)
                continue
        if count == 1 or box.diameter < cluster_size:
            lam, res, hist = _newton(sys, box.center, count, tol)
            inside = box.contains(lam, pad=1e-9 * (1 + abs(lam)))
            converged = inside and res <= residual_tolerance(lam, sys.n, tol)
            if converged or depth >= region.max_depth or box.diameter < cluster_size:
                if not inside:
                    lam, res, hist = box.center, abs(complex(char_det(sys, box.center))), ()
                roots.append(Root(complex(lam), int(count), float(res), hist))
                continue
        if depth >= region.max_depth:
            raise MaxDepthExceeded(f"depth {depth} reached with {count} zeros unresolved", partial=roots)
        for kid, c in _children(sys, box, count, contour_floor):
            stack.append((kid, c, depth + 1))
    roots.sort(key=lambda r: (round(r.lam.real, 12), r.lam.imag))
    return roots


def chain_seeds(sys, region):
    """Asymptotic root-chain guesses ``ln|mu| + i(arg mu + 2 pi k)`` for nonzero eigenvalues mu of A_{-1}.

    Purely advisory; clipped to ``region``.
    """
    mus = np.linalg.eigvals(sys.A_minus1)
    seeds = []
    scale = max(1.0, float(np.max(np.abs(mus)))) if mus.size else 1.0
    for mu in mus:
        if abs(mu) <= 1e-12 * scale:
            continue
        re = float(np.log(abs(mu)))
        if not region.re_min <= re <= region.re_max:
            continue
        arg = float(np.angle(mu))
        k_lo = int(np.ceil((region.im_min - arg) / (2 * np.pi)))
        k_hi = int(np.floor((region.im_max - arg) / (2 * np.pi)))
        seeds += [complex(re, arg + 2 * np.pi * k) for k in range(k_lo, k_hi + 1)]
    uniq = []
    for s in sorted(seeds, key=lambda c: (c.real, c.imag)):
        if not uniq or abs(s - uniq[-1]) > 1e-12:
            uniq.append(s)
    return uniq


def chain_real_parts(sys):
    """Real parts ``ln|mu|`` around which the neutral root chains accumulate."""
    mus = np.linalg.eigvals(sys.A_minus1)
    vals = sorted({round(float(np.log(abs(mu))), 12) for mu in mus if abs(mu) > 1e-12})
    return vals
