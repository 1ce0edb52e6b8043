"""Regenerate the F_{2^d} modulus table frozen in hyperred.gf.

For each d up to 16 this picks the smallest (by integer encoding) monic
primitive polynomial over F_2 that is norm-compatible with the choices
already made for every proper divisor of d, i.e. the generator relation
g_a = N(g_b) = g_b^((2^b-1)/(2^a-1)) holds whenever a | b.  The result is
printed as a Python dict literal; hyperred.gf carries the frozen copy and
tests/test_gf.py re-verifies both properties, so running this script is
only ever needed to extend the table.
"""

MAX_D = 16


def clmul(a, b):
    """Carryless product of two F_2[y] polynomials packed in ints."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def pmod(a, m):
    """Remainder of a modulo m in F_2[y]."""
    dm = m.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def pmulmod(a, b, m):
    return pmod(clmul(a, b), m)


def ppowmod(a, e, m):
    r = 1
    while e:
        if e & 1:
            r = pmulmod(r, a, m)
        a = pmulmod(a, a, m)
        e >>= 1
    return r


def prime_factors(n):
    ps = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            ps.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        ps.append(n)
    return ps


def is_primitive(m, d):
    """True if y generates the multiplicative group of F_2[y]/m, |F| = 2^d."""
    order = (1 << d) - 1
    if ppowmod(2, order, m) != 1:
        return False
    return all(ppowmod(2, order // p, m) != 1 for p in prime_factors(order))


def peval_mod(poly, arg, m):
    """Evaluate poly (packed int over F_2) at arg inside F_2[y]/m."""
    r = 0
    bit = poly.bit_length() - 1
    while bit >= 0:
        r = pmulmod(r, arg, m)
        if (poly >> bit) & 1:
            r ^= 1
        bit -= 1
    return r


def compatible(table, d, cand):
    for a in range(1, d):
        if d % a:
            continue
        img = ppowmod(2, ((1 << d) - 1) // ((1 << a) - 1), cand)
        if peval_mod(table[a], img, cand) != 0:
            return False
    return True


def main():
    table = {}
    for d in range(1, MAX_D + 1):
        for low in range(1, 1 << d, 2):  # odd constant term is necessary
            cand = (1 << d) | low
            if is_primitive(cand, d) and compatible(table, d, cand):
                table[d] = cand
                break
        else:
            raise AssertionError(f"no compatible primitive polynomial for d={d}")
    print("MODULUS = {")
    for d, m in table.items():
        print(f"    {d}: 0x{m:05x},  # degree {d}")
    print("}")


if __name__ == "__main__":
    main()
