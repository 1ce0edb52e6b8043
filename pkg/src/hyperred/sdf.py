"""Square-defect functions at even double points as exact piecewise-linear data.

The function lambda -> min{2, v(G(2^lambda u))} on the edge window [0, alpha]
is the lower envelope of the lines v(g_i) + i*lambda over the odd degrees i,
capped at 2.  Everything is computed combinatorially over Fractions; no
sampling.  Slopes are Laurent degrees, break points become thicknesses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .decomp import Decomposition, odd_decompose
from .laurent import AnnulusDomain
from .ring import PrecisionExhausted

TWO = Fraction(2)


@dataclass
class PLConcaveFn:
    """Concave piecewise-linear function on [0, alpha], values capped at 2."""

    alpha: Fraction
    breaks: list
    values: list
    slopes: list

    def __post_init__(self):
        bs, vs, ss = self.breaks, self.values, self.slopes
        assert bs[0] == 0 and bs[-1] == self.alpha
        assert len(vs) == len(bs) and len(ss) == len(bs) - 1
        assert all(a < b for a, b in zip(bs, bs[1:])), "breaks not increasing"
        assert all(a > b for a, b in zip(ss, ss[1:])), "not strictly concave"
        for k, s in enumerate(ss):
            assert vs[k + 1] - vs[k] == s * (bs[k + 1] - bs[k]), "values drift"
            if s == 0:
                assert vs[k] == TWO, "horizontal segment below the cap"
        assert all(0 <= v <= TWO for v in vs), "value outside [0, 2]"

    def value(self, lam) -> Fraction:
        lam = Fraction(lam)
        assert 0 <= lam <= self.alpha
        for k, s in enumerate(self.slopes):
            if lam <= self.breaks[k + 1]:
                return self.values[k] + s * (lam - self.breaks[k])
        return self.values[-1]

    def interior_breaks(self):
        """[(lambda, value)] strictly inside (0, alpha)."""
        return [(b, v) for b, v in zip(self.breaks, self.values)
                if 0 < b < self.alpha]

    def reversed(self) -> "PLConcaveFn":
        """The same edge seen from the other side: lambda -> f(alpha - lambda)."""
        return PLConcaveFn(self.alpha,
                           [self.alpha - b for b in reversed(self.breaks)],
                           list(reversed(self.values)),
                           [-s for s in reversed(self.slopes)])


def _envelope_lines(lines, alpha: Fraction):
    """Lower envelope of lines (v, i): lam -> v + i*lam, as hull pieces on [0, alpha].

    Returns [(lam_from, lam_to, v, i)] with active line per piece.
    """
    best = {}
    for v, i in lines:
        if i not in best or v < best[i]:
            best[i] = v
    order = sorted(best, reverse=True)       # slopes descending left-to-right
    stack = [order[0]]
    xs = []
    for i in order[1:]:
        while True:
            j = stack[-1]
            x = Fraction(best[i] - best[j], j - i)
            if xs and x <= xs[-1]:
                stack.pop()
                xs.pop()
            else:
                stack.append(i)
                xs.append(x)
                break
    pieces = []
    cuts = [Fraction(0)] + [x for x in xs] + [alpha]
    for k, i in enumerate(stack):
        lo, hi = max(Fraction(0), cuts[k]), min(alpha, cuts[k + 1])
        if lo < hi:
            pieces.append((lo, hi, best[i], i))
    return pieces


def _cap_pieces(pieces, alpha: Fraction):
    """Clip line pieces against the cap 2; emit (breaks, values, slopes)."""
    breaks, values, slopes = [Fraction(0)], [], []

    def emit(lam, val, slope):
        if lam == breaks[-1]:         # zero-length touch: a break, no segment
            return
        if slopes and slopes[-1] == slope:
            breaks[-1] = lam
            values[-1] = val
            return
        breaks.append(lam)
        slopes.append(slope)
        values.append(val)

    first = True
    for lo, hi, v, i in pieces:
        y_lo, y_hi = v + i * lo, v + i * hi
        if first:
            values.append(min(TWO, y_lo))
            first = False
        if y_lo >= TWO and y_hi >= TWO:
            emit(hi, TWO, 0)
        elif y_lo < TWO and y_hi < TWO:
            emit(hi, y_hi, i)
        elif y_lo >= TWO:
            x = Fraction(TWO - v, i)
            emit(x, TWO, 0)
            emit(hi, y_hi, i)
        else:
            x = Fraction(TWO - v, i)
            emit(x, TWO, i)
            emit(hi, TWO, 0)
    return breaks, values, slopes


def square_defect_function(G, alpha) -> PLConcaveFn:
    """min{2, envelope of G's odd-degree term lines} on [0, alpha]."""
    alpha = Fraction(alpha)
    assert alpha > 0
    lines, certs, evens = [], [], []
    for i, c in G.coeffs.items():
        if c.is_payload_zero:
            certs.append((i, c.trust))
        elif i % 2:
            lines.append((c.val(), i))
        else:
            evens.append((c.val(), i))
    if not lines:
        fn = PLConcaveFn(alpha, [Fraction(0), alpha], [TWO, TWO], [0])
    else:
        pieces = _envelope_lines(lines, alpha)
        breaks, values, slopes = _cap_pieces(pieces, alpha)
        assert breaks[-1] == alpha, "cap clipping lost the right endpoint"
        fn = PLConcaveFn(alpha, breaks, values, slopes)
    # a coefficient known only above its trust must not dip under the result
    for i, t in certs:
        if any(t + i * b < fn.value(b) for b in fn.breaks):
            raise PrecisionExhausted(
                f"degree-{i} coefficient bounded only by valuation {t} "
                "could undercut the square defect function")
    # leftover even terms are non-binding by the elimination invariant
    for v, i in evens:
        assert all(v + i * b >= fn.value(b) for b in fn.breaks), \
            "even term dips under the square defect function"
    return fn


def sdf_compute(dp) -> PLConcaveFn:
    """Square defect function of an even double point, X-side at lambda = 0."""
    assert dp.parity == "even", "square defect function needs an even edge"
    dec = odd_decompose(dp.F_dp, AnnulusDomain(Fraction(dp.thickness)))
    return square_defect_function(dec.G, dp.thickness)


def local_genus_even_dp(fn: PLConcaveFn) -> int:
    """(s1 - s2 + [s1=0] + [s2=0]) / 2 from the first and last slopes."""
    s1, s2 = fn.slopes[0], fn.slopes[-1]
    g2 = s1 - s2 + (1 if s1 == 0 else 0) + (1 if s2 == 0 else 0)
    assert g2 % 2 == 0, "local genus formula returned a half-integer"
    return g2 // 2


def upstairs_nodes_over_dp(fn: PLConcaveFn, segment: int) -> int:
    """Nodes of the cover over the annulus of one segment: 2 iff it is split."""
    return 2 if fn.slopes[segment] == 0 else 1
