"""Effectively-odd decompositions F = H^2 + G and the invariant wbar.

The decomposition pushes even-degree terms of G above min(2, odd envelope)
uniformly over the lambda-window of an annulus domain, using only residue
square roots and Teichmuller lifts.  Terms at or above that threshold are left
alone: terms at exactly 2 would loop through the very obstruction that makes
the rank-2 Artin-Schreier cover nontrivial, terms below 2 but above the odd
envelope would regenerate at ever finer lattice denominators, and neither kind
is visible to any downstream consumer (gamma, the reduced derivative, the AS
core, and the slope function all read G at the capped odd envelope).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .gf import GFLaurent, gf_sqrt
from .laurent import (AnnulusDomain, LaurentSeries, derivative, laurent_refine,
                      reduce, vF, vF_lower_bound)
from .ring import PrecisionExhausted, mul, ring_make

POINT_DOMAIN = AnnulusDomain(0)

_MAX_ELIMINATION_PASSES = 10000


@dataclass
class Decomposition:
    F: LaurentSeries
    H: LaurentSeries
    G: LaurentSeries
    domain: AnnulusDomain
    gamma: Fraction          # None when v(G) is only certified > 2
    wbar: Fraction
    w_exceeds_2: bool

    @property
    def odd_window(self):
        return (Fraction(0), self.domain.alpha)


def _even_targets(G: LaurentSeries, domain: AnnulusDomain):
    """Even-degree terms of G dipping below min(2, odd envelope) on the window.

    Only such terms can influence anything downstream: gamma and the reduced
    derivative read G at the odd minimum, the AS core reads it at exactly 2,
    and the slope function reads the odd envelope capped at 2.  Eliminating
    evens that merely sit below 2 but above the odd envelope would recreate
    them forever at geometrically growing lattice denominators.
    """
    alpha = domain.alpha
    odd_lines, evens = [], []
    for i, c in G.coeffs.items():
        floor = domain.term_floor(i)
        if c.is_payload_zero:
            if c.trust + floor < 2:
                raise PrecisionExhausted(
                    f"term x^{i} known only as O(v>={c.trust}); cannot "
                    f"certify the decomposition window")
            continue
        v = c.val()
        if i % 2:
            if v + floor < 2:
                odd_lines.append((v, i))
        else:
            if v + floor < 2:
                evens.append((v, i))
    if not evens:
        return []
    # Elimination test for an even line L: exists lam in [0, alpha] with
    # L(lam) < 2 and L(lam) <= odd envelope.  Both conditions flip sign only
    # at line crossings, so checking every crossing and endpoint is complete.
    base = {Fraction(0), alpha}
    all_lines = odd_lines + evens + [(Fraction(2), 0)]
    for a in range(len(all_lines)):
        va, ia = all_lines[a]
        for b in range(a + 1, len(all_lines)):
            vb, ib = all_lines[b]
            if ia != ib:
                lam = Fraction(va - vb, ib - ia)
                if 0 < lam < alpha:
                    base.add(lam)

    def odd_env(lam):
        vals = [v + i * lam for v, i in odd_lines]
        return min(vals) if vals else None

    out = []
    for v, i in evens:
        for lam in base:
            line = v + i * lam
            if line >= 2:
                continue
            env = odd_env(lam)
            if env is None or line <= env:
                out.append((v + domain.term_floor(i), i, v))
                break
    return out


def odd_decompose(F: LaurentSeries, domain: AnnulusDomain = POINT_DOMAIN) -> Decomposition:
    """Iteratively eliminate the lowest-scoring even monomial of G into H."""
    G = F
    H = LaurentSeries(F.ring, {})
    for _ in range(_MAX_ELIMINATION_PASSES):
        targets = _even_targets(G, domain)
        if not targets:
            break
        _, i, s = min(targets, key=lambda t: (t[0], t[1]))
        ring = G.ring
        if (Fraction(s, 2) * ring.N).denominator != 1:
            ring = ring_make(2 * ring.N, ring.d, ring.P, ring.caps)
            G = laurent_refine(G, ring)
            H = laurent_refine(H, ring)
        a = G.coeffs[i]
        t = ring.teichmuller_elem(gf_sqrt(ring.field, a.residue()))
        h = LaurentSeries(ring, {i // 2: mul(t, ring.pow2(Fraction(s, 2)))})
        G = G.sub(h.mul(H).scale(2)).sub(h.mul(h))
        H = H.add(h)
    else:
        raise RuntimeError("odd decomposition failed to stabilize")
    try:
        g = vF(G)
    except PrecisionExhausted:
        if vF_lower_bound(G) > 2:
            g = None
        else:
            raise
    if g is None:
        gamma, wbar, exceeds = None, Fraction(2), True
    elif g > 2:
        gamma, wbar, exceeds = g, Fraction(2), True
    elif g == 2:
        gamma, wbar, exceeds = g, Fraction(2), False
    else:
        gamma, wbar, exceeds = g, g, False
    return Decomposition(F, H, G, domain, gamma, wbar, exceeds)


def wbar_of(F: LaurentSeries, domain: AnnulusDomain = POINT_DOMAIN) -> Fraction:
    return odd_decompose(F, domain).wbar


def square_defect_core(F: LaurentSeries, domain: AnnulusDomain = POINT_DOMAIN):
    """(wbar, canonical residue [G'/2^gamma]) with the residue None if wbar = 2.

    For wbar < 2 the returned residue is decomposition-independent: even
    leftovers sit above valuation 2, so their derivatives (an extra factor 2)
    sit above gamma + 1 and vanish in the reduction.
    """
    dec = odd_decompose(F, domain)
    if dec.wbar == 2:
        return dec.wbar, None
    return dec.wbar, reduce(derivative(dec.G), dec.gamma)


def as_core(dec: Decomposition):
    """The Artin-Schreier data ([G/4], [H]) when gamma = 2.

    Substituting z = H + 2t into z^2 = F gives t^2 + [H]t = [G/4] on the
    residue curve, i.e. tau^2 + tau = [G/4]/[H]^2 after tau = t/[H].  The
    rational right-hand side is what decides genus and splitness; using the
    bare [G/4] silently misclassifies perfect squares whose greedy
    decomposition stalls at valuation exactly 2.
    """
    assert dec.gamma == 2, "AS core only exists at the valuation-2 boundary"
    return reduce(dec.G, 2), reduce(dec.H, 0)


def approx_equiv(F: LaurentSeries, Ft: LaurentSeries,
                 domain: AnnulusDomain = POINT_DOMAIN,
                 pointwise: bool = False) -> bool:
    """Certify that Ft may replace F: v(F - Ft) > wbar(F) or >= 2.

    With pointwise=True, instead certify min_i (v(d_i) + i*lam) > 2 at both
    window endpoints (hence on the whole window, by concavity of the min).
    """
    D = F.sub(Ft)
    if pointwise:
        for lam in (Fraction(0), domain.alpha):
            for i, c in D.coeffs.items():
                lb = c.val_lower_bound()
                if lb + i * lam <= 2:
                    if c.is_payload_zero:
                        raise PrecisionExhausted(
                            f"difference term x^{i} known only as O(v>={c.trust})")
                    return False
        return True
    w = wbar_of(F, domain)
    try:
        vD = vF(D)
    except PrecisionExhausted:
        lb = vF_lower_bound(D)
        if lb >= 2 or lb > w:
            return True
        raise
    if vD is None:
        return True
    return vD > w or vD >= 2
