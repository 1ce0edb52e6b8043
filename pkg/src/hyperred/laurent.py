"""Laurent polynomials over a 2-adic coefficient ring, and their residues.

A series is a finite support map degree -> RElem, all coefficients living in
one shared ring.  The substitutions here are the only coordinate changes the
engine ever performs: x -> 2^lam * u (pure digit shifts), x -> c + y (Taylor
shift, polynomials only), x -> 1/u, plus unit-monomial normalization.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .gf import GFLaurent
from .ring import (PrecisionExhausted, RElem, _coerce, add, inv_unit,
                   join_ring, mul, pow_int, refine, ring_make)


class LaurentSeries:

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring, coeffs):
        tgt = ring
        for c in coeffs.values():
            if isinstance(c, RElem) and c.ring is not tgt:
                tgt = join_ring(tgt, c.ring)
        clean = {}
        for i, c in coeffs.items():
            c = _coerce(tgt, c) if not isinstance(c, RElem) else c
            if c.ring is not tgt:
                c = refine(c, tgt)
            if not c.exact_zero:
                clean[i] = c
        self.ring = tgt
        self.coeffs = clean

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        items = ", ".join(f"x^{i}: {c!r}" for i, c in sorted(self.coeffs.items()))
        return f"LaurentSeries({items})"

    def get(self, i) -> RElem:
        c = self.coeffs.get(i)
        return c if c is not None else self.ring.zero()

    def deg(self):
        return max(self.coeffs) if self.coeffs else None

    def ldeg(self):
        return min(self.coeffs) if self.coeffs else None

    def support(self):
        return sorted(self.coeffs)

    def add(self, other: "LaurentSeries") -> "LaurentSeries":
        c = dict(self.coeffs)
        for i, v in other.coeffs.items():
            c[i] = c[i] + v if i in c else v
        return LaurentSeries(self.ring, c)

    def sub(self, other: "LaurentSeries") -> "LaurentSeries":
        c = dict(self.coeffs)
        for i, v in other.coeffs.items():
            c[i] = c[i] - v if i in c else -v
        return LaurentSeries(self.ring, c)

    def mul(self, other: "LaurentSeries") -> "LaurentSeries":
        out = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                k = i + j
                p = mul(a, b)
                out[k] = out[k] + p if k in out else p
        return LaurentSeries(self.ring, out)

    def scale(self, c) -> "LaurentSeries":
        c = _coerce(self.ring, c)
        return LaurentSeries(self.ring, {i: mul(a, c) for i, a in self.coeffs.items()})

    def shift(self, k: int) -> "LaurentSeries":
        return LaurentSeries(self.ring, {i + k: a for i, a in self.coeffs.items()})


def make_series(ring, coeffs: dict) -> LaurentSeries:
    return LaurentSeries(ring, coeffs)


def laurent_refine(F: LaurentSeries, new_ring) -> LaurentSeries:
    return LaurentSeries(new_ring, {i: refine(c, new_ring) for i, c in F.coeffs.items()})


def vF(F: LaurentSeries):
    """Certified minimum valuation over coefficients; None if F is exactly 0."""
    vals, lbs = [], []
    for c in F.coeffs.values():
        if c.is_payload_zero:
            lbs.append(c.trust)
        else:
            vals.append(c.val())
    if not vals:
        if not lbs:
            return None
        raise PrecisionExhausted(
            f"series valuation known only as >= {min(lbs)}")
    m = min(vals)
    if any(lb < m for lb in lbs):
        raise PrecisionExhausted(
            f"a coefficient known only as O(v>={min(lbs)}) may undercut v={m}")
    return m


def vF_lower_bound(F: LaurentSeries) -> Fraction:
    bounds = [c.val_lower_bound() for c in F.coeffs.values()]
    return min(bounds) if bounds else Fraction(1 << 62)


def reduce(F: LaurentSeries, gamma) -> GFLaurent:
    """Residue series [F / 2^gamma] in F_{2^d}[x, x^-1]; needs v(F) >= gamma."""
    gamma = Fraction(gamma)
    ring = F.ring
    out = {}
    for i, c in F.coeffs.items():
        if c.is_payload_zero:
            if c.trust <= gamma:
                raise PrecisionExhausted(
                    f"coefficient of x^{i} known only as O(v>={c.trust}), need past {gamma}")
            continue
        v = c.val()
        if v < gamma:
            raise ValueError(f"reduce at {gamma} but coefficient of x^{i} has v={v}")
        if v > gamma:
            continue
        if c.trust <= gamma:
            raise PrecisionExhausted(
                f"leading digit of x^{i} coefficient sits at the trust boundary")
        out[i] = c.residue()
    return GFLaurent(ring.field, out)


def subst_scale(F: LaurentSeries, lam) -> LaurentSeries:
    """Substitute x = 2^lam * u; refines the ring when lam*N is fractional."""
    lam = Fraction(lam)
    ring = F.ring
    den = lam.denominator
    if ring.N % den:
        N2 = ring.N * den // gcd(ring.N, den)
        ring = ring_make(N2, ring.d, ring.P, ring.caps)
        F = laurent_refine(F, ring)
    return LaurentSeries(ring, {i: mul(c, ring.pow2(lam * i))
                                for i, c in F.coeffs.items()})


def subst_translate(F: LaurentSeries, c) -> LaurentSeries:
    """Substitute x = c + y (Taylor shift); F must be a polynomial."""
    if F.ldeg() is not None and F.ldeg() < 0:
        raise ValueError("translate needs a polynomial; clear poles first")
    c = _coerce(F.ring, c)
    n = (F.deg() or 0) + 1
    a = [F.get(i) for i in range(n)]
    for i in range(n):
        for j in range(n - 2, i - 1, -1):
            a[j] = a[j] + mul(c, a[j + 1])
    return LaurentSeries(F.ring, {i: a[i] for i in range(n)})


def subst_invert(F: LaurentSeries) -> LaurentSeries:
    """Substitute x = 1/u."""
    return LaurentSeries(F.ring, {-i: c for i, c in F.coeffs.items()})


def evaluate(F: LaurentSeries, x: RElem) -> RElem:
    """F(x) by Horner over the sparse support (poles need an invertible x)."""
    if not F.coeffs:
        return F.ring.zero()
    degs = sorted(F.coeffs, reverse=True)
    if degs[-1] < 0:
        xi = inv_unit(x)
        neg = sum((mul(pow_int(xi, -i), F.coeffs[i]) for i in degs if i < 0),
                  F.ring.zero())
    else:
        neg = F.ring.zero()
    acc = F.ring.zero()
    prev = None
    for i in degs:
        if i < 0:
            break
        if prev is not None:
            acc = mul(acc, pow_int(x, prev - i))
        acc = add(acc, F.coeffs[i])
        prev = i
    if prev is not None and prev > 0:
        acc = mul(acc, pow_int(x, prev))
    elif prev is None:
        acc = F.ring.zero()
    return add(acc, neg)


def derivative(F: LaurentSeries) -> LaurentSeries:
    return LaurentSeries(F.ring, {i - 1: mul(c, i) for i, c in F.coeffs.items() if i})


def normalize_unit_monomial(F: LaurentSeries):
    """Factor F = u * x^m * F1 with F1 having constant term exactly 1.

    u is the lowest-degree coefficient (must have certified valuation);
    returns (F1, u, m).
    """
    m = F.ldeg()
    if m is None:
        raise ValueError("cannot normalize the zero series")
    u = F.get(m)
    iu = inv_unit(u)
    coeffs = {i - m: mul(c, iu) for i, c in F.coeffs.items()}
    coeffs[0] = F.ring.one()  # exact by construction of the normalization
    return LaurentSeries(F.ring, coeffs), u, m


class AnnulusDomain:
    """The annulus v(x) in [0, alpha]; validates integrality of a series on it."""

    def __init__(self, alpha):
        alpha = Fraction(alpha)
        assert alpha >= 0
        self.alpha = alpha

    def __repr__(self):
        return f"AnnulusDomain(alpha={self.alpha})"

    def term_floor(self, i: int) -> Fraction:
        """min over lam in [0, alpha] of i*lam (the binding endpoint)."""
        return min(Fraction(0), self.alpha * i)

    def validate(self, F: LaurentSeries):
        for i, c in F.coeffs.items():
            if c.val_lower_bound() + self.term_floor(i) < 0:
                raise ValueError(
                    f"term x^{i} not integral on {self!r}: v={c.val_lower_bound()}")


def active_terms(F: LaurentSeries, domain: AnnulusDomain, cutoff=Fraction(2)):
    """Terms whose valuation line dips below cutoff somewhere on the domain.

    Returns {degree: exact valuation}.  Terms certified to stay at or above
    cutoff are dropped; an uncertain coefficient that might dip below raises.
    """
    out = {}
    for i, c in F.coeffs.items():
        floor = domain.term_floor(i)
        if c.is_payload_zero:
            if c.trust + floor < cutoff:
                raise PrecisionExhausted(
                    f"term x^{i} known only as O(v>={c.trust}); "
                    f"could dip below {cutoff} on the domain")
            continue
        v = c.val()
        if v + floor < cutoff:
            out[i] = v
    return out
