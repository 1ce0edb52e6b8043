"""Exact finite-precision arithmetic in tame 2-adic coefficient rings.

A ring R(N, d, P) models W(F_{2^d})[pi]/(pi^N - 2) with v(2) = 1, to absolute
precision P.  Elements track a certified error bound (`trust`): the stored
digits and the true value differ by something of valuation >= trust.  Only
tame-by-2^(1/N) and unramified-by-F_{2^d} extensions exist here; anything
needing a wildly ramified extension must fail loudly upstream.

The unramified part A = Z_2[y]/(mtilde(y), 2^M) uses the integer 0/1 lift of
the frozen field modulus; A-elements are d-tuples of ints mod 2^M.  A full
element is sum_j pay[j] * pi^(s+j) with pay a length-N tuple of A-elements.
Canonical form: payload empty, or the minimum of N*v2(pay[j]) + j over slots
is 0, so the valuation is exactly s/N.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, gcd

from .gf import MODULUS, CapExceeded, embed, get_field


class PrecisionExhausted(ArithmeticError):
    """A certified answer would need digits beyond the tracked precision."""


class NonUnitInverse(ArithmeticError):
    """Inversion of an element whose valuation cannot be certified."""


@dataclass(frozen=True)
class Caps:
    max_ram_index: int = 240
    max_residue_degree: int = 16

    def merge(self, other: "Caps") -> "Caps":
        return Caps(max(self.max_ram_index, other.max_ram_index),
                    max(self.max_residue_degree, other.max_residue_degree))


DEFAULT_CAPS = Caps()
DEFAULT_PRECISION = 12


def _v2(n: int) -> int:
    return (n & -n).bit_length() - 1


class CoeffRing:
    """Cached arithmetic context for one choice of (N, d, P)."""

    def __init__(self, N: int, d: int, P, caps: Caps):
        self.N = N
        self.d = d
        self.P = Fraction(P)
        self.M = ceil(self.P) + 3  # guard digits past the requested precision
        self.caps = caps
        self.field = get_field(d)
        self.mod_bits = tuple(t for t in range(d) if (MODULUS[d] >> t) & 1)
        self.mask = (1 << self.M) - 1
        self._teich = {}
        self._azero = (0,) * d
        self._aone = (1,) + (0,) * (d - 1)

    def __repr__(self):
        return f"CoeffRing(N={self.N}, d={self.d}, P={self.P})"

    # -- arithmetic in A = Z_2[y]/(mtilde, 2^M) --------------------------------

    def a_add(self, u, v):
        return tuple((a + b) & self.mask for a, b in zip(u, v))

    def a_neg(self, u):
        return tuple((-a) & self.mask for a in u)

    def a_int_scale(self, u, n: int):
        return tuple((a * n) & self.mask for a in u)

    def a_mul(self, u, v):
        d = self.d
        if d == 1:
            return ((u[0] * v[0]) & self.mask,)
        prod = [0] * (2 * d - 1)
        for i, a in enumerate(u):
            if a:
                for j, b in enumerate(v):
                    if b:
                        prod[i + j] += a * b
        for k in range(2 * d - 2, d - 1, -1):
            c = prod[k]
            if c:
                for t in self.mod_bits:
                    prod[k - d + t] -= c
                prod[k] = 0
        return tuple(c & self.mask for c in prod[:d])

    def a_residue(self, u) -> int:
        """Reduction A -> F_{2^d} as a packed field element."""
        r = 0
        for i, a in enumerate(u):
            if a & 1:
                r |= 1 << i
        return r

    def a_lift(self, c: int):
        """The 0/1-digit lift of a residue element."""
        return tuple((c >> i) & 1 for i in range(self.d))

    def a_inv_unit(self, u):
        r0 = self.a_residue(u)
        if r0 == 0:
            raise NonUnitInverse("residue of A-element is zero")
        b = self.a_lift(self.field.inv(r0))
        two = (2,) + (0,) * (self.d - 1)
        k = 1
        while k < self.M:
            b = self.a_mul(b, self.a_add(two, self.a_neg(self.a_mul(u, b))))
            k *= 2
        return b

    def a_v2(self, u) -> int:
        """Minimum 2-adic valuation over coordinates; M for the zero element."""
        m = self.M
        for a in u:
            if a:
                m = min(m, _v2(a))
        return m

    def teichmuller(self, c: int):
        """Frobenius-fixed lift of c in A, cached."""
        t = self._teich.get(c)
        if t is None:
            z = self.a_lift(c)
            for _ in range(self.M):
                for _ in range(self.d):
                    z = self.a_mul(z, z)
            t = self._teich[c] = z
        return t

    # -- element constructors ---------------------------------------------------

    def _make(self, s, pay, trust, exact_zero=False):
        return _normalize(RElem(self, s, pay, trust, exact_zero))

    def zero(self):
        return RElem(self, 0, ((0,) * self.d,) * self.N, _INF, True)

    def zero_certificate(self, trust) -> "RElem":
        """An element known only to satisfy v >= trust (no digits resolved)."""
        return RElem(self, 0, ((0,) * self.d,) * self.N, Fraction(trust), False)

    def one(self):
        return self.from_int(1)

    def from_int(self, n: int):
        if n == 0:
            return self.zero()
        pay = [self._azero] * self.N
        pay[0] = ((n & self.mask),) + (0,) * (self.d - 1)
        return self._make(0, tuple(pay), Fraction(self.M))

    def from_rational(self, num: int, den: int = 1, pow2: int = 0):
        """num/den * 2^pow2 with den odd (2-parts must go through pow2)."""
        if den < 0:
            num, den = -num, -den
        t = _v2(den) if den else 0
        if den and den % 2 == 0:
            den >>= t
            pow2 -= t
        x = self.from_int(num)
        if den != 1:
            x = mul(x, inv_unit(self.from_int(den)))
        if pow2:
            x = mul(x, self.pow2(pow2))
        return x

    def pow2(self, lam) -> "RElem":
        """The exact power 2^lam = pi^(lam*N); lam*N must be an integer."""
        lam = Fraction(lam)
        sN = lam * self.N
        if sN.denominator != 1:
            raise ValueError(f"2^{lam} needs ramification index divisible by {lam.denominator}")
        pay = [self._azero] * self.N
        pay[0] = self._aone
        return _normalize(RElem(self, int(sN), tuple(pay), lam + self.M, False))

    def teichmuller_elem(self, c: int) -> "RElem":
        if c == 0:
            return self.zero()
        pay = [self._azero] * self.N
        pay[0] = self.teichmuller(c)
        return _normalize(RElem(self, 0, tuple(pay), Fraction(self.M), False))


_INF = Fraction(1 << 62)  # sentinel trust for the exact zero


@lru_cache(maxsize=None)
def _ring_cached(N: int, d: int, P, caps: Caps) -> CoeffRing:
    return CoeffRing(N, d, P, caps)


def ring_make(N: int = 1, d: int = 1, P=DEFAULT_PRECISION, caps: Caps = None) -> CoeffRing:
    caps = caps or DEFAULT_CAPS
    P = Fraction(P)
    if P <= 3:
        raise ValueError(f"precision {P} too small (need P > 3)")
    if N < 1 or N > caps.max_ram_index:
        raise CapExceeded(f"ramification index {N} exceeds cap {caps.max_ram_index}")
    if d < 1 or d > caps.max_residue_degree:
        raise CapExceeded(f"residue degree {d} exceeds cap {caps.max_residue_degree}")
    if d not in MODULUS:
        raise CapExceeded(f"no residue field of degree {d} available")
    return _ring_cached(N, d, P, caps)


class RElem:
    """One element: sum_j pay[j]*pi^(s+j), plus a certified error bound."""

    __slots__ = ("ring", "s", "pay", "trust", "exact_zero")

    def __init__(self, ring, s, pay, trust, exact_zero):
        self.ring = ring
        self.s = s
        self.pay = pay
        self.trust = trust
        self.exact_zero = exact_zero

    # -- queries ---------------------------------------------------------------

    @property
    def is_payload_zero(self) -> bool:
        az = self.ring._azero
        return all(a == az for a in self.pay)

    @property
    def is_zero_certificate(self) -> bool:
        return self.is_payload_zero and not self.exact_zero

    def val(self):
        """Certified valuation as a Fraction; None for the exact zero."""
        if self.exact_zero:
            return None
        if self.is_payload_zero:
            raise PrecisionExhausted(
                f"valuation known only as >= {self.trust} (zero certificate)")
        return Fraction(self.s, self.ring.N)

    def val_lower_bound(self) -> Fraction:
        if self.exact_zero:
            return _INF
        if self.is_payload_zero:
            return self.trust
        return Fraction(self.s, self.ring.N)

    def residue(self) -> int:
        """Leading residue [x / 2^v(x)] in F_{2^d} for a canonical element."""
        if self.exact_zero or self.is_payload_zero:
            raise PrecisionExhausted("no leading digit to read a residue from")
        return self.ring.a_residue(self.pay[0])

    def __repr__(self):
        if self.exact_zero:
            return "RElem(0)"
        if self.is_payload_zero:
            return f"RElem(O(v>={self.trust}))"
        return (f"RElem(v={Fraction(self.s, self.ring.N)}, lead={self.pay[0]},"
                f" trust={self.trust})")

    # -- operators ---------------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(_coerce(self.ring, other)))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)


def _coerce(ring, x):
    if isinstance(x, RElem):
        return x
    if isinstance(x, int):
        return ring.from_int(x)
    if isinstance(x, Fraction):
        return ring.from_rational(x.numerator, x.denominator)
    raise TypeError(f"cannot coerce {type(x).__name__} into {ring!r}")


def _normalize(x: RElem) -> RElem:
    """Mask digits beyond trust, then factor out the payload's pi-valuation."""
    ring = x.ring
    if x.exact_zero:
        return RElem(ring, 0, ((0,) * ring.d,) * ring.N, _INF, True)
    N, M = ring.N, ring.M
    s, pay, trust = x.s, list(x.pay), min(x.trust, Fraction(x.s, N) + M)
    while True:
        # keep only digit positions with pi-valuation < trust
        changed = False
        for j in range(N):
            a = pay[j]
            if a == ring._azero:
                continue
            bound = trust - Fraction(s + j, N)
            keep = ceil(bound) if bound > 0 else 0
            if keep >= M:
                mask = ring.mask
            else:
                mask = (1 << keep) - 1
            masked = tuple(c & mask for c in a)
            if masked != a:
                pay[j] = masked
                changed = True
        m = None
        for j in range(N):
            if pay[j] != ring._azero:
                t = N * ring.a_v2(pay[j]) + j
                if m is None or t < m:
                    m = t
        if m is None:
            return RElem(ring, 0, ((0,) * ring.d,) * N, trust, False)
        if m == 0:
            return RElem(ring, s, tuple(pay), trust, False)
        # factor pi^m out of every slot and fold excess powers back as 2s
        new_pay = [ring._azero] * N
        for j in range(N):
            a = pay[j]
            if a == ring._azero:
                continue
            e = ring.a_v2(a)
            b = tuple(c >> e for c in a)
            tj = j + N * e - m
            q, r = divmod(tj, N)
            cell = ring.a_int_scale(b, 1 << q) if q else b
            new_pay[r] = ring.a_add(new_pay[r], cell)
        s += m
        pay = new_pay
        # folded terms may cancel; loop until slot 0 is genuinely odd or empty


def add(x: RElem, y) -> RElem:
    y = _coerce(x.ring, y)
    x, y = _unify(x, y)
    ring = x.ring
    if x.exact_zero:
        return y
    if y.exact_zero:
        return x
    N = ring.N
    s = min(x.s, y.s)
    pay = [ring._azero] * N
    for src in (x, y):
        off = src.s - s
        for j in range(N):
            a = src.pay[j]
            if a == ring._azero:
                continue
            q, r = divmod(j + off, N)
            cell = ring.a_int_scale(a, 1 << q) if q else a
            pay[r] = ring.a_add(pay[r], cell)
    return _normalize(RElem(ring, s, tuple(pay), min(x.trust, y.trust), False))


def neg(x: RElem) -> RElem:
    if x.exact_zero:
        return x
    ring = x.ring
    return _normalize(RElem(ring, x.s, tuple(ring.a_neg(a) for a in x.pay),
                            x.trust, False))


def mul(x: RElem, y) -> RElem:
    y = _coerce(x.ring, y)
    x, y = _unify(x, y)
    ring = x.ring
    if x.exact_zero or y.exact_zero:
        return ring.zero()
    trust = min(x.val_lower_bound() + y.trust, y.val_lower_bound() + x.trust)
    if x.is_payload_zero or y.is_payload_zero:
        return RElem(ring, 0, ((0,) * ring.d,) * ring.N, trust, False)
    N = ring.N
    pay = [ring._azero] * N
    nz_x = [(j, a) for j, a in enumerate(x.pay) if a != ring._azero]
    nz_y = [(j, a) for j, a in enumerate(y.pay) if a != ring._azero]
    for j1, a1 in nz_x:
        for j2, a2 in nz_y:
            prod = ring.a_mul(a1, a2)
            q, r = divmod(j1 + j2, N)
            if q:
                prod = ring.a_int_scale(prod, 1 << q)
            pay[r] = ring.a_add(pay[r], prod)
    return _normalize(RElem(ring, x.s + y.s, tuple(pay), trust, False))


def inv_unit(x: RElem) -> RElem:
    """Inverse of an element with certified valuation (relative trust kept)."""
    if x.exact_zero or x.is_payload_zero:
        raise NonUnitInverse("cannot invert: no certified leading digit")
    ring = x.ring
    v = x.val()
    b = ring.teichmuller_elem(ring.field.inv(x.residue()))
    u = mul(x, ring.pow2(-v)) if v else x
    # b tracks the inverse of the unit part u; each step doubles correct digits
    steps = max(1, (ring.M * ring.N).bit_length())
    two = ring.from_int(2)
    for _ in range(steps):
        b = mul(b, add(two, neg(mul(u, b))))
    res = mul(b, ring.pow2(-v)) if v else b
    # relative precision of x is trust - v; the inverse carries the same
    return _normalize(RElem(res.ring, res.s, res.pay,
                            min(res.trust, x.trust - 2 * v), res.exact_zero))


def val(x: RElem):
    return x.val()


def truncate_val(x: RElem, bound) -> RElem:
    """The exact element made of the digits of x with valuation <= bound."""
    bound = Fraction(bound)
    if x.exact_zero:
        return x
    assert x.trust > bound, "digits at the truncation bound are not certified"
    if x.is_payload_zero:
        return x.ring.zero()
    ring = x.ring
    pay = []
    for j, a in enumerate(x.pay):
        keep = (bound - Fraction(x.s + j, ring.N)).__floor__() + 1
        if keep <= 0:
            pay.append(ring._azero)
        elif keep >= ring.M:
            pay.append(a)
        else:
            mask = (1 << keep) - 1
            pay.append(tuple(c & mask for c in a))
    return _normalize(RElem(ring, x.s, tuple(pay),
                            Fraction(x.s, ring.N) + ring.M, False))


def pow_int(x: RElem, k: int) -> RElem:
    assert k >= 0
    r = x.ring.one()
    b = x
    while k:
        if k & 1:
            r = mul(r, b)
        b = mul(b, b)
        k >>= 1
    return r


def teichmuller_lift(ring: CoeffRing, c: int) -> RElem:
    return ring.teichmuller_elem(c)


def pow2(ring: CoeffRing, lam) -> RElem:
    return ring.pow2(lam)


# -- refinement ------------------------------------------------------------------


@lru_cache(maxsize=None)
def _embedding_powers(d_old: int, d_new: int, M: int):
    """Images of y_old^i (i < d_old) inside A_new, Hensel-lifted."""
    ring = _ring_cached(1, d_new, Fraction(M - 3), DEFAULT_CAPS)
    assert ring.M == M
    if d_old == d_new:
        return tuple(ring.a_lift(1 << i) for i in range(d_old))
    fb = ring.field
    g = fb.pow(2, ((1 << d_new) - 1) // ((1 << d_old) - 1))
    z = ring.a_lift(g)
    fcoeffs = [(MODULUS[d_old] >> t) & 1 for t in range(d_old + 1)]
    dcoeffs = [t * fcoeffs[t] for t in range(1, d_old + 1)]

    def poly_at(coeffs, z):
        r = ring._azero
        for c in reversed(coeffs):
            r = ring.a_mul(r, z)
            if c:
                r = ring.a_add(r, ring.a_int_scale(ring._aone, c))
        return r

    k = 1
    while k < M:
        fz = poly_at(fcoeffs, z)
        dz = poly_at(dcoeffs, z)
        z = ring.a_add(z, ring.a_neg(ring.a_mul(fz, ring.a_inv_unit(dz))))
        k *= 2
    assert poly_at(fcoeffs, z) == ring._azero, "Hensel lift failed to converge"
    powers = [ring._aone]
    for _ in range(d_old - 1):
        powers.append(ring.a_mul(powers[-1], z))
    return tuple(powers)


def refine(x: RElem, new_ring: CoeffRing) -> RElem:
    """Re-express x in a finer ring (N multiple, d multiple, same precision)."""
    old = x.ring
    if new_ring is old:
        return x
    if new_ring.N % old.N or new_ring.d % old.d or new_ring.M != old.M:
        raise ValueError(f"cannot refine {old!r} into {new_ring!r}")
    if x.exact_zero:
        return new_ring.zero()
    k = new_ring.N // old.N
    same_d = new_ring.d == old.d
    powers = None if same_d else _embedding_powers(old.d, new_ring.d, old.M)
    pay = [new_ring._azero] * new_ring.N
    for j, a in enumerate(x.pay):
        if a == old._azero:
            continue
        if same_d:
            img = a
        else:
            img = new_ring._azero
            for i, c in enumerate(a):
                if c:
                    img = new_ring.a_add(img, new_ring.a_int_scale(powers[i], c))
        pay[j * k] = img
    return _normalize(RElem(new_ring, x.s * k, tuple(pay), x.trust, False))


def join_ring(r1: CoeffRing, r2: CoeffRing) -> CoeffRing:
    if r1 is r2:
        return r1
    caps = r1.caps.merge(r2.caps)
    N = r1.N * r2.N // gcd(r1.N, r2.N)
    d = r1.d * r2.d // gcd(r1.d, r2.d)
    if r1.P != r2.P:
        raise ValueError("cannot join rings of different precision")
    return ring_make(N, d, r1.P, caps)


def _unify(x: RElem, y: RElem):
    if x.ring is y.ring:
        return x, y
    r = join_ring(x.ring, y.ring)
    return refine(x, r), refine(y, r)
