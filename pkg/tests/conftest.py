"""Shared builders for the test suite."""

import random
from fractions import Fraction

import pytest

from hyperred.laurent import make_series
from hyperred.ring import ring_make


def series(ring, coeffs: dict):
    """Laurent series from {degree: int | Fraction-pow2 pair | RElem}."""
    out = {}
    for i, c in coeffs.items():
        if isinstance(c, int):
            out[i] = ring.from_int(c)
        elif isinstance(c, tuple):
            n, pw = c
            out[i] = ring.from_rational(n, 1, Fraction(pw))
        else:
            out[i] = c
    return make_series(ring, out)


@pytest.fixture
def R1():
    return ring_make(1, 1, 14)


@pytest.fixture
def R2():
    return ring_make(2, 1, 14)


@pytest.fixture
def rng():
    return random.Random(20260815)


def random_factors(ring, rnd, *, genus_range=(1, 4), coeff_bound=9):
    """Random separable factored polynomial with small integer coefficients.

    Factor degrees partition deg F in {2g+1, 2g+2}; separability is not
    forced here, callers skip the rare collision failures loudly.
    """
    g = rnd.randint(*genus_range)
    deg = 2 * g + 1 + rnd.randint(0, 1)
    parts = []
    left = deg
    while left > 0:
        d = rnd.randint(1, min(4, left))
        if left - d == 0 or left - d >= 1:
            parts.append(d)
            left -= d
    factors = []
    for d in parts:
        coeffs = {d: rnd.choice([1, 1, 1, 3, 2])}
        while coeffs[d] == 0:
            coeffs[d] = rnd.randint(-coeff_bound, coeff_bound)
        for i in range(d):
            c = rnd.randint(-coeff_bound, coeff_bound)
            if c:
                coeffs[i] = c
        factors.append(series(ring, coeffs))
    return factors, g
