"""2-adic root finding: Newton polygons, Hensel lifting, cluster recursion.

Roots are located in tame/unramified extensions of the coefficient ring only.
A cluster that keeps refusing to separate (residue multiplicity persisting
through repeated recentering) signals a root in a wildly ramified extension;
that is reported loudly as WildRootObstruction, never approximated.
"""

from __future__ import annotations

from fractions import Fraction

from .gf import CapExceeded, poly_deg, roots_with_multiplicity
from .laurent import (LaurentSeries, derivative, evaluate, laurent_refine,
                      reduce, subst_scale, subst_translate, vF)
from .ring import (PrecisionExhausted, add, inv_unit, mul, neg, ring_make)

MAX_CLUSTER_DEPTH = 12


class WildRootObstruction(RuntimeError):
    """A root needs wild ramification that the ring tower cannot represent."""


def _lower_hull(pts):
    """Lower convex hull of points sorted by first coordinate."""
    hull = [pts[0]]
    for p in pts[1:]:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] unless hull[-2] -> hull[-1] -> p turns left
            if (x2 - x1) * (p[1] - y1) <= (y2 - y1) * (p[0] - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _cert_below_hull(hull, i, t) -> bool:
    """Whether a coefficient bounded below by t at index i could dip under hull."""
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= i <= x2:
            return (t - y1) * (x2 - x1) < (y2 - y1) * (i - x1)
    return True


def _split_support(F: LaurentSeries):
    """Sorted (certain_points, certificates) over the stored support."""
    pts, certs = [], []
    for i in sorted(F.coeffs):
        c = F.coeffs[i]
        if c.is_payload_zero:
            certs.append((i, c.trust))
        else:
            pts.append((i, c.val()))
    return pts, certs


def newton_polygon(F: LaurentSeries):
    """Lower-hull segments of {(i, v(a_i))} as [(slope, length)], slopes ascending.

    Zero-certificate coefficients must sit on or above the hull of the certain
    ones, and inside their index range; otherwise the polygon is not determined
    at the working precision and PrecisionExhausted is raised.
    """
    pts, certs = _split_support(F)
    if not pts:
        raise PrecisionExhausted("no certified coefficient anchors the polygon")
    hull = _lower_hull(pts)
    for i, t in certs:
        if i < hull[0][0] or i > hull[-1][0]:
            raise PrecisionExhausted(
                f"coefficient of degree {i} is only bounded below valuation "
                f"{t}, outside the certified index range")
        if _cert_below_hull(hull, i, t):
            raise PrecisionExhausted(
                f"coefficient of degree {i} known only above valuation {t}, "
                "below the hull")
    return [(Fraction(y2 - y1, x2 - x1), x2 - x1)
            for (x1, y1), (x2, y2) in zip(hull, hull[1:])]


def _hensel(G: LaurentSeries, z):
    """Newton iteration from a start whose residue is a simple root of [G]."""
    dG = derivative(G)
    prev = None
    for _ in range(64):
        step = mul(evaluate(G, z), inv_unit(evaluate(dG, z)))
        lb = step.val_lower_bound()
        if prev is not None and lb <= prev:
            break
        z = add(z, neg(step))
        prev = lb
        if lb >= G.ring.P:
            break
    else:
        raise PrecisionExhausted("Newton iteration stalled before converging")
    return z


def find_roots(F: LaurentSeries, *, positive_only: bool = False,
               _depth: int = 0) -> list:
    """All roots of the polynomial F, one RElem per root.

    F must be separable (simple roots); a repeated exact root at 0 is refused.
    With positive_only, only roots of strictly positive valuation are kept
    (used when recursing into the cluster around a residue root).  A single
    root driven below the working precision by cancellation is returned as a
    zero certificate; two or more such roots raise PrecisionExhausted.
    """
    if _depth > MAX_CLUSTER_DEPTH:
        raise WildRootObstruction(
            f"cluster failed to separate within depth {MAX_CLUSTER_DEPTH}; "
            "the roots involved need a wildly ramified extension")
    ld = F.ldeg()
    if ld is None:
        raise ValueError("the zero polynomial has no well-defined roots")
    if ld < 0:
        raise ValueError("roots of a Laurent series: clear poles first")
    roots = []
    if ld > 0:
        if F.coeffs[ld].is_payload_zero:
            raise PrecisionExhausted(
                "lowest coefficient is a zero certificate over an exact zero; "
                "multiplicity at 0 is undetermined")
        if ld > 1:
            raise ValueError("input has a repeated root at 0; not separable")
        roots.append(F.ring.zero())
    if F.deg() == ld:
        return roots
    pts, certs = _split_support(F)
    if not pts:
        raise PrecisionExhausted("no certified coefficient anchors the polygon")
    hull = _lower_hull(pts)
    i0, y0 = hull[0]
    segments = [(Fraction(y2 - y1, x2 - x1), x2 - x1)
                for (x1, y1), (x2, y2) in zip(hull, hull[1:])]
    for i, t in certs:
        if i > hull[-1][0]:
            raise PrecisionExhausted(
                f"leading coefficient of degree {i} known only above "
                f"valuation {t}; the polygon is undetermined at infinity")
        if i >= i0 and _cert_below_hull(hull, i, t):
            raise PrecisionExhausted(
                f"coefficient of degree {i} known only above valuation {t}, "
                "below the hull")
    low = [(i, t) for i, t in certs if i < i0]
    if low:
        # cancellation drove the tail below precision; one root survives as a
        # certificate provided it sits strictly above every resolved root
        if len(low) > 1 or low[0][0] != i0 - 1:
            raise PrecisionExhausted(
                "several roots collapse below the working precision near 0; "
                "supply factored input or raise precision")
        tau = low[0][1] - y0
        if segments and tau <= -segments[0][0]:
            raise PrecisionExhausted(
                "an unresolved root is not separated from the resolved ones")
        if tau <= 0:
            raise PrecisionExhausted(
                "an unresolved root has no positive valuation bound")
        roots.append(F.ring.zero_certificate(tau))
    for slope, length in segments:
        mu = -slope
        if positive_only and mu <= 0:
            continue
        try:
            roots.extend(_segment_roots(F, mu, length, _depth))
        except CapExceeded as exc:
            if _depth == 0:
                raise
            raise WildRootObstruction(
                "cluster refinement exceeded the ring caps without "
                f"separating: {exc}") from exc
    return roots


def _segment_roots(F: LaurentSeries, mu: Fraction, length: int, depth: int):
    """Roots of F of valuation exactly mu (one Newton-polygon segment)."""
    Gs = subst_scale(F, mu)
    vmin = vF(Gs)
    gbar = reduce(Gs, vmin)
    li = min(gbar.coeffs)
    gpoly = [gbar.get(li + k) for k in range(gbar.deg() - li + 1)]
    assert poly_deg(gpoly) == length, "segment length mismatch in residue"
    ring = Gs.ring
    res_roots, _ = roots_with_multiplicity(
        gbar.field, gpoly, ring.caps.max_residue_degree)
    out = []
    for cbar, mult, e in res_roots:
        if e == 1:
            ring2, G2 = ring, Gs
        else:
            ring2 = ring_make(ring.N, ring.d * e, ring.P, ring.caps)
            G2 = laurent_refine(Gs, ring2)
        z0 = ring2.teichmuller_elem(cbar)
        if mult == 1:
            z = _hensel(G2, z0)
            out.append(mul(z.ring.pow2(mu), z))
        else:
            shifted = subst_translate(G2, z0)
            for w in find_roots(shifted, positive_only=True, _depth=depth + 1):
                z = add(z0, w)
                out.append(mul(z.ring.pow2(mu), z))
    return out


def find_roots_factored(factors: list) -> list:
    """Concatenate the roots of each factor (kept exact per factor)."""
    out = []
    for f in factors:
        out.extend(find_roots(f))
    return out
