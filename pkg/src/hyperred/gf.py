"""Residue-field algebra: F_{2^d}, polynomials over it, Artin-Schreier forms.

Field elements are plain ints packed as bit vectors over a fixed modulus per
degree (table below, regenerated by scripts/regen_field_table.py).  Moduli are
primitive and norm-compatible along divisibility, so y_a |-> y_b^((2^b-1)/(2^a-1))
is the canonical embedding F_{2^a} -> F_{2^b} and embeddings compose.

Polynomials over a field are lists of ints, index = degree, no trailing zeros.
The zero polynomial is [].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd as int_gcd


class CapExceeded(ValueError):
    """A configured extension or lattice cap would be exceeded."""


MAX_FIELD_DEGREE = 16

# Frozen output of scripts/regen_field_table.py: smallest primitive polynomial
# per degree compatible (norm condition) with all proper-divisor choices.
MODULUS = {
    1: 0x00003,
    2: 0x00007,
    3: 0x0000B,
    4: 0x00013,
    5: 0x00025,
    6: 0x0005B,
    7: 0x00083,
    8: 0x0011D,
    9: 0x00211,
    10: 0x0046F,
    11: 0x00805,
    12: 0x010EB,
    13: 0x0201B,
    14: 0x040A9,
    15: 0x08035,
    16: 0x1002D,
}

_TABLE_LIMIT = 12  # build log/exp tables up to this degree


def clmul(a: int, b: int) -> int:
    """Carryless product of two packed F_2[y] polynomials."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def clmod(a: int, m: int) -> int:
    """Remainder of a modulo m in F_2[y]."""
    dm = m.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


class GF2m:
    """The field F_{2^d}; elements are ints in [0, 2^d)."""

    def __init__(self, d: int):
        if d not in MODULUS:
            raise CapExceeded(f"no modulus for residue degree {d} (max {MAX_FIELD_DEGREE})")
        self.d = d
        self.modulus = MODULUS[d]
        self.order = 1 << d
        self.exp = self.log = None
        if d <= _TABLE_LIMIT:
            exp = [1] * (self.order - 1)
            log = [0] * self.order
            v = 1
            for i in range(self.order - 2):
                v = clmod(v << 1, self.modulus)  # y is primitive by table construction
                exp[i + 1] = v
                log[v] = i + 1
            self.exp, self.log = exp, log

    def __repr__(self):
        return f"GF2m({self.d})"

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        if self.exp is not None:
            return self.exp[(self.log[a] + self.log[b]) % (self.order - 1)]
        return clmod(clmul(a, b), self.modulus)

    def sqr(self, a: int) -> int:
        return self.mul(a, a)

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        if self.exp is not None:
            return self.exp[(self.log[a] * e) % (self.order - 1)]
        r = 1
        e %= self.order - 1
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in GF(2^d)")
        return self.pow(a, self.order - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def sqrt(self, a: int) -> int:
        """The unique square root (Frobenius is bijective)."""
        return self.pow(a, 1 << (self.d - 1))

    def trace(self, a: int) -> int:
        """Absolute trace to F_2, returned as 0 or 1."""
        t, x = 0, a
        for _ in range(self.d):
            t ^= x
            x = self.sqr(x)
        assert t in (0, 1)
        return t

    def frob(self, a: int, k: int = 1) -> int:
        """k-fold application of x -> x^2."""
        for _ in range(k % self.d if a else 0):
            a = self.sqr(a)
        return a


def gf_sqrt(field: GF2m, c: int) -> int:
    """Square root in F_{2^d} (inverse Frobenius); always exists and is unique."""
    return field.sqrt(c)


@lru_cache(maxsize=None)
def get_field(d: int) -> GF2m:
    return GF2m(d)


@lru_cache(maxsize=None)
def _embed_generator_image(a: int, b: int) -> int:
    """Image of y_a in F_{2^b} under the canonical embedding, a | b."""
    fb = get_field(b)
    return fb.pow(2, ((1 << b) - 1) // ((1 << a) - 1))


def embed(c: int, small: GF2m, big: GF2m) -> int:
    """Embed c from F_{2^a} into F_{2^b} along the canonical tower map."""
    if small.d == big.d:
        return c
    if big.d % small.d:
        raise ValueError(f"no embedding F_{{2^{small.d}}} -> F_{{2^{big.d}}}")
    img = _embed_generator_image(small.d, big.d)
    r = 0
    bit = small.d - 1
    while bit >= 0:
        r = big.mul(r, img)
        if (c >> bit) & 1:
            r ^= 1
        bit -= 1
    return r


# ---------------------------------------------------------------------------
# polynomials: list of ints, index = degree, trimmed


def poly_trim(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_deg(p) -> int:
    """Degree, with deg 0 = -1 by convention."""
    return len(p) - 1


def poly_add(p, q):
    if len(p) < len(q):
        p, q = q, p
    r = list(p)
    for i, c in enumerate(q):
        r[i] ^= c
    return poly_trim(r)


def poly_scale(field, p, c):
    if c == 0:
        return []
    return [field.mul(a, c) for a in p]


def poly_mul(field, p, q):
    if not p or not q:
        return []
    r = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                if b:
                    r[i + j] ^= field.mul(a, b)
    return poly_trim(r)


def poly_divmod(field, p, q):
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    dq = poly_deg(q)
    inv_lead = field.inv(q[-1])
    quot = [0] * max(0, len(r) - dq)
    while poly_deg(r) >= dq:
        k = poly_deg(r) - dq
        c = field.mul(r[-1], inv_lead)
        quot[k] = c
        for i, b in enumerate(q):
            r[k + i] ^= field.mul(c, b)
        poly_trim(r)
    return poly_trim(quot), r


def poly_mod(field, p, q):
    return poly_divmod(field, p, q)[1]


def poly_gcd(field, p, q):
    while q:
        p, q = q, poly_mod(field, p, q)
    return poly_monic(field, p)


def poly_monic(field, p):
    if not p or p[-1] == 1:
        return list(p)
    return poly_scale(field, p, field.inv(p[-1]))


def poly_eval(field, p, x):
    r = 0
    for c in reversed(p):
        r = field.mul(r, x) ^ c
    return r


def poly_deriv(field, p):
    return poly_trim([p[i] if i % 2 else 0 for i in range(1, len(p))])


def poly_pow_mod(field, p, e, m):
    r, b = [1], poly_mod(field, p, m)
    while e:
        if e & 1:
            r = poly_mod(field, poly_mul(field, r, b), m)
        b = poly_mod(field, poly_mul(field, b, b), m)
        e >>= 1
    return r


def poly_sqrt(field, p):
    """Square root of a polynomial supported in even degrees only."""
    assert all(c == 0 for i, c in enumerate(p) if i % 2), "not a square"
    return poly_trim([field.sqrt(c) for c in p[0::2]])


def poly_embed(p, small, big):
    return [embed(c, small, big) for c in p]


def squarefree_decomposition(field, f):
    """Yun-style decomposition in characteristic 2: list of (g_i, multiplicity)."""
    out = []

    def rec(f, mult):
        if poly_deg(f) <= 0:
            return
        df = poly_deriv(field, f)
        if not df:
            rec(poly_sqrt(field, f), 2 * mult)
            return
        c = poly_gcd(field, f, df)
        w, _ = poly_divmod(field, f, c)
        i = 1
        while poly_deg(w) > 0:
            y = poly_gcd(field, w, c)
            z, _ = poly_divmod(field, w, y)
            if poly_deg(z) > 0:
                out.append((poly_monic(field, z), i * mult))
            w = y
            c, _ = poly_divmod(field, c, y)
            i += 1
        if poly_deg(c) > 0:
            rec(poly_sqrt(field, c), 2 * mult)

    rec(poly_monic(field, f), 1)
    return out


def _distinct_degree(field, f):
    """Distinct-degree split of a monic squarefree f: list of (product, degree)."""
    out = []
    h = [0, 1]
    k = 0
    while poly_deg(f) > 0:
        k += 1
        if 2 * k > poly_deg(f):
            out.append((f, poly_deg(f)))
            break
        h = poly_pow_mod(field, h, field.order, f)
        g = poly_gcd(field, poly_add(h, [0, 1]), f)
        if poly_deg(g) > 0:
            out.append((g, k))
            f, _ = poly_divmod(field, f, g)
            h = poly_mod(field, h, f)
    return out


def _trace_map(field, h, k, m):
    """Sum of h^(2^i) mod m for i < k*d (absolute trace map into F_2)."""
    t, x = [], list(h)
    for _ in range(k * field.d):
        t = poly_add(t, x)
        x = poly_mod(field, poly_mul(field, x, x), m)
    return t

def _equal_degree(field, f, k):
    """Split monic squarefree f, all of whose factors have degree k."""
    if poly_deg(f) == k:
        return [f]
    # deterministic seed sweep: h = c*x^j for successive field elements c
    j = 1
    while True:
        for c in range(1, field.order):
            h = [0] * j + [c]
            t = _trace_map(field, h, k, f)
            g = poly_gcd(field, t, f)
            if 0 < poly_deg(g) < poly_deg(f):
                rest, _ = poly_divmod(field, f, g)
                return _equal_degree(field, g, k) + _equal_degree(field, rest, k)
        j += 1
        assert j <= poly_deg(f) + 2, "equal-degree split failed to separate"


def factor(field, f):
    """Full factorization: sorted list of (monic irreducible, multiplicity)."""
    assert f, "factor(0) is undefined"
    out = []
    for g, mult in squarefree_decomposition(field, f):
        for prod, k in _distinct_degree(field, g):
            for irr in _equal_degree(field, prod, k):
                out.append((irr, mult))
    out.sort(key=lambda fm: (poly_deg(fm[0]), fm[0][::-1], fm[1]))
    return out


def _one_root_in_splitting_field(field, irr, big):
    """One root of an irreducible factor, inside its splitting field big."""
    f = poly_monic(big, poly_embed(irr, field, big))
    # over big the factor splits into linear pieces; peel with trace-map gcds
    while poly_deg(f) > 1:
        done = False
        j = 1
        while not done:
            for c in range(1, big.order):
                h = [0] * j + [c]
                t = _trace_map(big, h, 1, f)
                g = poly_gcd(big, t, f)
                if 0 < poly_deg(g) < poly_deg(f):
                    f = g if poly_deg(g) <= poly_deg(f) - poly_deg(g) else poly_divmod(big, f, g)[0]
                    f = poly_monic(big, f)
                    done = True
                    break
            else:
                j += 1
    return f[0]  # monic linear x + r has root r (char 2)


def roots_with_multiplicity(field, f, max_degree: int = MAX_FIELD_DEGREE):
    """All roots of f in the algebraic closure.

    Returns (roots, e_min) where roots is a list of (root, multiplicity, e)
    with root an element of F_{2^(d*e)} under the canonical embedding, and
    e_min is the lcm of all extension degrees e that occur.
    """
    out = []
    e_min = 1
    for irr, mult in factor(field, f):
        e = poly_deg(irr)
        if e * field.d > max_degree:
            raise CapExceeded(
                f"root needs residue degree {e * field.d} > cap {max_degree}")
        big = get_field(e * field.d)
        r = _one_root_in_splitting_field(field, irr, big)
        orbit = [r]
        for _ in range(e - 1):
            orbit.append(big.frob(orbit[-1], field.d))
        assert len(set(orbit)) == e, "Frobenius orbit collapsed"
        for r in sorted(orbit):
            out.append((r, mult, e))
        e_min = e_min * e // int_gcd(e_min, e)
    return out, e_min


# ---------------------------------------------------------------------------
# Laurent polynomials over F_{2^d} and Artin-Schreier reduction


@dataclass
class GFLaurent:
    """Finite-support map degree -> field element; no zero coefficients stored."""

    field: GF2m
    coeffs: dict

    def __post_init__(self):
        self.coeffs = {i: c for i, c in self.coeffs.items() if c}

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        return isinstance(other, GFLaurent) and self.coeffs == other.coeffs

    def deg(self):
        return max(self.coeffs) if self.coeffs else None

    def ldeg(self):
        return min(self.coeffs) if self.coeffs else None

    def get(self, i):
        return self.coeffs.get(i, 0)

    def add(self, other):
        c = dict(self.coeffs)
        for i, v in other.coeffs.items():
            c[i] = c.get(i, 0) ^ v
        return GFLaurent(self.field, c)

    def mul(self, other):
        c = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                c[i + j] = c.get(i + j, 0) ^ self.field.mul(a, b)
        return GFLaurent(self.field, c)

    def shift(self, k):
        return GFLaurent(self.field, {i + k: c for i, c in self.coeffs.items()})

    def poly_parts(self):
        """(x^m * self as a plain polynomial list, m = -ldeg)."""
        if not self.coeffs:
            return [], 0
        m = -min(min(self.coeffs), 0)
        p = [0] * (max(self.coeffs) + m + 1)
        for i, c in self.coeffs.items():
            p[i + m] = c
        return poly_trim(p), m

    def sorted_items(self):
        return sorted(self.coeffs.items())


@dataclass
class ASForm:
    """Reduced right-hand side of t^2 + t = P with all pole orders odd.

    split uses the constructive field-rational criterion: P reduced to a
    constant of absolute trace 0.  A constant of trace 1 becomes split after
    one residue-degree doubling (geometric splitness); callers that need the
    geometric notion test `constant` instead.
    """

    P: GFLaurent
    genus: int
    split: bool
    constant: bool
    two_rank: int


def artin_schreier_reduce(P: GFLaurent) -> ASForm:
    """Kill even-order pole parts of P by adding h^2 + h; report genus/splitness.

    Genus of t^2 + t = P with odd pole orders m_i is sum (m_i+1)/2 - 1 (and 0
    with no poles); poles here live at 0 and infinity only.
    """
    field = P.field
    c = dict(P.coeffs)
    while True:
        d = max((i for i, v in c.items() if v and i > 0), default=None)
        if d is None or d % 2:
            break
        s = field.sqrt(c[d])
        c[d] = 0
        c[d // 2] = c.get(d // 2, 0) ^ s
    while True:
        d = min((i for i, v in c.items() if v and i < 0), default=None)
        if d is None or d % 2:
            break
        s = field.sqrt(c[d])
        c[d] = 0
        c[d // 2] = c.get(d // 2, 0) ^ s
    red = GFLaurent(field, c)
    poles = []
    if red.coeffs and red.deg() > 0:
        poles.append(red.deg())
    if red.coeffs and red.ldeg() < 0:
        poles.append(-red.ldeg())
    if not poles:
        const = red.get(0)
        return ASForm(red, 0, field.trace(const) == 0, True, 0)
    genus = sum((m + 1) // 2 for m in poles) - 1
    return ASForm(red, genus, False, False, len(poles) - 1)


@dataclass
class RationalAS:
    """Reduction data for t^2 + t = num/den over the rational function field."""

    genus: int
    split: bool          # geometric: reduced to a constant
    poles: list          # [(label, odd order)] with label "inf" or a root repr
    field: GF2m          # splitting field the reduction ran over

    @property
    def two_rank(self):
        return 0 if self.split else len(self.poles) - 1


def artin_schreier_reduce_rational(field, num, den, max_degree: int = MAX_FIELD_DEGREE):
    """Pole-parity reduction of P = num/den over its splitting field.

    Works over the smallest extension containing all roots of den, reduces
    every even-order pole (finite ones via peaks of the local expansion, the
    infinite one via the polynomial part), and returns genus / geometric
    splitness / the odd pole orders.
    """
    if not num:
        return RationalAS(0, True, [], field)
    e_all = 1
    for irr, _ in factor(field, den):
        e = poly_deg(irr)
        e_all = e_all * e // int_gcd(e_all, e)
    if e_all * field.d > max_degree:
        raise CapExceeded(
            f"splitting field needs residue degree {e_all * field.d} > cap {max_degree}")
    big = get_field(e_all * field.d)
    num = poly_embed(num, field, big)
    den = poly_embed(den, field, big)
    g = poly_gcd(big, num, den)
    num, _ = poly_divmod(big, num, g)
    den, _ = poly_divmod(big, den, g)
    lead = big.inv(den[-1])
    num = poly_scale(big, num, lead)
    den = poly_scale(big, den, lead)

    def root_multiplicity(p, zeta):
        m = 0
        lin = [zeta, 1]
        while True:
            q, r = poly_divmod(big, p, lin)
            if r:
                return m, p
            m += 1
            p = q

    roots, _ = roots_with_multiplicity(big, den, max_degree=big.d)
    pending = sorted({r for r, _, _ in roots})
    poles = []
    for zeta in pending:
        while num:
            m, den_hat = root_multiplicity(den, zeta)
            if m == 0:
                break
            if m % 2:
                poles.append((f"x={zeta}", m))
                break
            # leading Laurent coefficient of num/den at zeta
            cval = big.div(poly_eval(big, num, zeta), poly_eval(big, den_hat, zeta))
            s = big.sqrt(cval)
            # num/den += c/(x-zeta)^m + s/(x-zeta)^(m/2)  (i.e. peel h^2 + h)
            lin_half = [1]
            for _ in range(m // 2):
                lin_half = poly_mul(big, lin_half, [zeta, 1])
            adj = poly_add(poly_scale(big, den_hat, cval),
                           poly_scale(big, poly_mul(big, den_hat, lin_half), s))
            num = poly_add(num, adj)
            g = poly_gcd(big, num, den)
            if poly_deg(g) > 0:
                num, _ = poly_divmod(big, num, g)
                den, _ = poly_divmod(big, den, g)
    while num:
        dq = poly_deg(num) - poly_deg(den)
        if dq <= 0 or dq % 2:
            break
        cval = big.mul(num[-1], big.inv(den[-1]))
        s = big.sqrt(cval)
        adj = poly_add([0] * dq + [cval], [0] * (dq // 2) + [s])
        num = poly_add(num, poly_mul(big, den, adj))
    dq = poly_deg(num) - poly_deg(den) if num else -1
    if dq > 0:
        poles.append(("inf", dq))
    if not poles:
        return RationalAS(0, True, [], big)
    genus = sum((m + 1) // 2 for _, m in poles) - 1
    return RationalAS(genus, False, sorted(poles), big)


def artin_schreier_pair(P: GFLaurent, Hbar: GFLaurent,
                        max_degree: int = MAX_FIELD_DEGREE) -> RationalAS:
    """Reduce t^2 + t = P/Hbar^2 given Laurent data (clears x-powers first)."""
    field = P.field
    if not P:
        return RationalAS(0, True, [], field)
    assert Hbar, "unit part must have a nonzero residue"
    num0, mn = P.poly_parts()
    den0, md = Hbar.mul(Hbar).poly_parts()
    if md >= mn:
        num, den = [0] * (md - mn) + num0, den0
    else:
        num, den = num0, [0] * (mn - md) + den0
    return artin_schreier_reduce_rational(field, num, den, max_degree)


# ---------------------------------------------------------------------------
# table self-checks used by the test suite


def prime_factors(n):
    ps, p = [], 2
    while p * p <= n:
        if n % p == 0:
            ps.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        ps.append(n)
    return ps


def modulus_is_primitive(d: int) -> bool:
    m = MODULUS[d]
    order = (1 << d) - 1

    def powmod(a, e):
        r = 1
        while e:
            if e & 1:
                r = clmod(clmul(r, a), m)
            a = clmod(clmul(a, a), m)
            e >>= 1
        return r

    if powmod(2, order) != 1:
        return False
    return all(powmod(2, order // p) != 1 for p in prime_factors(order))


def moduli_are_compatible(a: int, b: int) -> bool:
    """Norm condition: modulus_a(y_b^((2^b-1)/(2^a-1))) = 0 in F_{2^b}."""
    big = get_field(b)
    img = _embed_generator_image(a, b)
    r = 0
    for bit in range(a, -1, -1):
        r = big.mul(r, img)
        if (MODULUS[a] >> bit) & 1:
            r ^= 1
    return r == 0
