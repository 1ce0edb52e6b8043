"""Fibers over smooth unmarked points: local genus and the blow-up tree.

The square defect along the blow-up scale lambda is concave, increasing, and
piecewise linear with odd integer slopes, so it is reconstructed by an
event-driven walk: the point decomposition at the current scale predicts the
next break or cap hit from its odd term lines, and a fresh point decomposition
at the predicted scale verifies the value.  Since the initial slope at any
scale is canonical and the true function is concave, the defect can never
exceed the active line, and agreement at both ends of a segment pins the
function on the whole segment.  A probe that comes back low reveals a hidden
break, which is localized by intersecting the active line with the arriving
line and re-probing.  Break residues are read off the verifying
decompositions themselves.

Candidate slopes at a pinned point are the odd degrees achieving the minimum,
tried largest first.  A slope that is too large is rejected by exact
arithmetic at a single readable probe: the probe value falls below the
hypothesis line, the arriving line through the probe then intersects the
hypothesis line at or before the pin, and a concave function cannot do that.
A slope is confirmed solid when two readable probes sit exactly on its line,
which together with the pinned left endpoint makes three collinear points,
something a concave function can only realize by running along the line.  A
line that runs straight to 2 may also be accepted provisionally when the
scales near the cap are unreadable; the consistency checks on the cap
residue (pole order, leaf genus, irreducibility) then arbitrate, and on
failure the walk backtracks to the next candidate.  Distinct survivors of
that arbitration differ only by unstable intermediate charts, which the
stable contraction removes.

Probing cost is the binding constraint.  A probe at scale p/q needs a ring
of ramification index q, and each elimination step that halves an off-lattice
valuation doubles it, so scales near the cap (where the defect approaches 2
and the cascade runs long) are unreadable within the ring caps.  An
overflowing probe therefore carries no information and is skipped; probe
scales are drawn from the base-dyadic lattice, whose rings stay minimal, and
the unreadable stretch between the last pinned scale and the cap is covered
by the consistency checks on the cap residue itself.  That residue is read at
the cap scale directly, after eliminating only the even terms that could
still land an absorption cross on valuation exactly 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .decomp import POINT_DOMAIN, odd_decompose
from .gf import (CapExceeded, GFLaurent, artin_schreier_pair, gf_sqrt,
                 poly_deg, roots_with_multiplicity)
from .laurent import (LaurentSeries, laurent_refine, reduce, subst_scale,
                      subst_translate)
from .ring import (PrecisionExhausted, add, join_ring, mul, pow2, refine,
                   ring_make)
from .sdf import TWO

_MAX_WALK_EVENTS = 64
_MAX_CAP_PASSES = 400
_MAX_RECENTER = 12
_MAX_RETREATS = 16


@dataclass
class FiberComponent:
    """One component of the fiber: type (c) interior, type (d) leaf.

    lam is the blow-up scale measured from the smooth point, center the
    offset from that point as a ring element, wbar the square defect of the
    component (2 for a leaf).
    """

    kind: str
    lam: Fraction
    wbar: Fraction
    genus: int
    split: bool
    children: list = field(default_factory=list)   # (thickness, annotation, FiberComponent)
    pole_order: int = None
    center: object = None


@dataclass
class FiberTree:
    local_genus: int
    first_thickness: Fraction
    first_annotation: str
    root: FiberComponent

    def all_components(self):
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(child for _, _, child in reversed(node.children))
        return out


def _odd_minimum_degrees(dec):
    """(min, max) odd degree of G whose coefficient sits at valuation wbar."""
    gamma = dec.wbar
    cands = [i for i, c in dec.G.coeffs.items()
             if i % 2 and not c.is_payload_zero and c.val() == gamma]
    assert cands, "no odd term achieves the square defect"
    return min(cands), max(cands)


def local_genus_smooth(F_local: LaurentSeries) -> int:
    """Half the multiplicity of 0 as a root of [dG/dx / 2^gamma]; 0 when wbar=2."""
    dec = odd_decompose(F_local, POINT_DOMAIN)
    if dec.wbar >= TWO:
        return 0
    s1, _ = _odd_minimum_degrees(dec)
    assert (s1 - 1) % 2 == 0, "derivative multiplicity is odd"
    return (s1 - 1) // 2


def smooth_point_spectrum(dec, max_degree: int):
    """Roots (cbar, mult, e) of the canonical residue [dG/dx / 2^gamma].

    Positive-genus smooth points of the component sit at these roots; the
    caller filters out residues occupied by markings or nodes.
    """
    from .laurent import derivative
    if dec.wbar >= TWO:
        return []
    dgr = reduce(derivative(dec.G), dec.wbar)
    if not dgr:
        return []
    li = min(dgr.coeffs)
    assert li >= 0, "component equation must be a polynomial"
    poly = [dgr.get(li + k) for k in range(dgr.deg() - li + 1)]
    roots, _ = roots_with_multiplicity(dgr.field, poly, max_degree)
    out = [(0, li, 1)] if li else []
    out.extend(roots)
    return out


def invert_local(F: LaurentSeries) -> LaurentSeries:
    """Local equation at residue infinity: u^(2*ceil(deg/2)) * F(1/u)."""
    d = F.deg()
    m = 2 * ((d + 1) // 2)
    return LaurentSeries(F.ring, {m - i: c for i, c in F.coeffs.items()})


def leaf_thickness(parent_sq_defect, g_T: int, unique: bool):
    """(eps, exact): eps = (2 - wbar(X)) / (2 g(T) + 1), exact iff T is unique."""
    eps = (TWO - Fraction(parent_sq_defect)) / (2 * g_T + 1)
    return eps, unique


def _lattice_scales(a, b, N0: int, limit: int = _MAX_RETREATS):
    """Probe scales strictly inside (a, b) off the base-dyadic lattice.

    A scale with denominator N0 * 2^k keeps the scaled ring at exactly that
    ramification index, so candidates come cheapest ring first and, within
    one ring, nearest the far end of the segment (the tightest usable pin).
    """
    out, seen = [], set()
    den = N0
    for _ in range(12):
        p_hi = (b * den).__ceil__() - 1
        p_lo = (a * den).__floor__() + 1
        for p in range(p_hi, p_lo - 1, -1):
            t = Fraction(p, den)
            if a < t < b and t not in seen:
                seen.add(t)
                out.append(t)
                if len(out) >= limit:
                    return out
        den *= 2
    return out


def _probe(F_local: LaurentSeries, lam):
    """Point decomposition of F at scale lam; authoritative defect value."""
    Fs = subst_scale(F_local, lam) if lam else F_local
    return odd_decompose(Fs, POINT_DOMAIN)


def _probe_capped(F_local: LaurentSeries, lam, cache: dict):
    """Probe returning None when the scale overflows the ring caps.

    Overflow means the value at this scale is not representable within the
    caps, nothing more: the walk must treat it as unknown, not as 2.
    """
    if lam not in cache:
        try:
            cache[lam] = _probe(F_local, lam)
        except CapExceeded:
            cache[lam] = None
    return cache[lam]


def _line_events(dec, w, s):
    """First event on the slope-s line through (0, w): (mu, value).

    The event is the earliest positive scale where another odd line of G
    starting above w crosses below the hypothesis line, or where the line
    reaches 2.  Lines already at the minimum with smaller degree are
    concurrent candidate slopes at the same pin, not events.
    """
    mu_cap = (TWO - w) / s
    mu_ev, w_ev = mu_cap, TWO
    for i, c in dec.G.coeffs.items():
        if i % 2 == 0 or i >= s:
            continue
        if c.is_payload_zero:
            if c.trust + i * mu_cap < w + s * mu_cap:
                raise PrecisionExhausted(
                    f"odd term x^{i} known only past valuation {c.trust}, "
                    "cannot certify the walk segment")
            continue
        v = c.val()
        if v <= w:
            continue
        mu = Fraction(v - w, s - i)
        if mu < mu_ev:
            mu_ev, w_ev = mu, w + s * mu
    return mu_ev, w_ev


def _cap_read(F_local, eps):
    """Artin-Schreier data (residue at exactly 2, [H] constant) at the cap.

    Runs a bounded square completion directly at the cap scale eps.  A cross
    off an even term at valuation a lands at 1 + a/2 plus an H-term
    valuation, so it can only hit exactly 2 while a <= 2 - 2*delta with
    delta the least positive valuation H will ever hold.  Every positive
    H valuation is half of an eliminated even valuation or at least 1/2
    (deposited crosses sit at 1 + a/2 + v over 2), so delta is beta/2 for
    beta the least even digit valuation of the input in (0, 1]; with no
    such digit nothing can reach 2 beyond the plain h0 cross, which the
    downstream Artin-Schreier reduction absorbs.  Evens above the threshold
    cascade strictly below 2 forever without touching the residue read and
    are left alone.
    """
    G = subst_scale(F_local, eps)
    H = LaurentSeries(G.ring, {})
    betas = []
    for i, c in G.coeffs.items():
        if i % 2:
            continue
        if c.is_payload_zero:
            if c.trust <= 1:
                raise PrecisionExhausted(
                    f"even term x^{i} known only past valuation {c.trust}, "
                    "cannot certify the cap residue")
            continue
        if 0 < c.val() <= 1:
            betas.append(c.val())
    beta = min(betas) if betas else None
    thresh = TWO - beta if beta is not None else Fraction(0)
    for _ in range(_MAX_CAP_PASSES):
        targets = []
        for i, c in G.coeffs.items():
            if i % 2:
                continue
            if c.is_payload_zero:
                if c.trust <= thresh:
                    raise PrecisionExhausted(
                        f"even term x^{i} known only past valuation "
                        f"{c.trust}, cannot certify the cap residue")
                continue
            if c.val() <= thresh:
                targets.append((c.val(), i))
        if not targets:
            break
        v, i = min(targets)
        ring = G.ring
        if (Fraction(v, 2) * ring.N).denominator != 1:
            ring = ring_make(2 * ring.N, ring.d, ring.P, ring.caps)
            G = laurent_refine(G, ring)
            H = laurent_refine(H, ring)
        t = ring.teichmuller_elem(gf_sqrt(ring.field, G.coeffs[i].residue()))
        h = LaurentSeries(ring, {i // 2: mul(t, ring.pow2(Fraction(v) / 2))})
        G = G.sub(h.mul(H).scale(2)).sub(h.mul(h))
        H = H.add(h)
    else:
        raise RuntimeError("cap residue read failed to stabilize")
    delta = beta / 2 if beta is not None else None
    out = {}
    for i, c in G.coeffs.items():
        if c.is_payload_zero:
            if c.trust <= TWO:
                raise PrecisionExhausted(
                    f"cap residue needs x^{i} past valuation 2")
            continue
        v = c.val()
        if v < TWO and i % 2:
            # phantom odd junk: absorbing it deposits crosses at v plus a
            # positive H valuation, which clear 2 exactly when v > 2 - delta
            if delta is None or v > TWO - delta:
                continue
            raise RuntimeError(
                f"cannot certify the cap residue against the odd term x^{i} "
                f"at valuation {v}")
        if v == TWO:
            if c.trust <= TWO:
                raise PrecisionExhausted(
                    f"leading digit of x^{i} at the cap sits at the trust "
                    "boundary")
            out[i] = c.residue()
    return GFLaurent(G.ring.field, out), reduce(H, 0).get(0)


def _try_slope(F_local, lam, w, dec, s, cache):
    """Probe-test the hypothesis that the defect leaves (lam, w) with slope s.

    Returns None when the hypothesis is refuted, ("cap", (eps, solid)) when
    the line runs straight to 2 at absolute scale eps, or ("advance",
    (lam', w', dec')) for the next pinned point on the line, which is either
    the predicted crossing or a localized hidden break.  Refutation is by
    value: a probe above the line means the slope is too small, and a probe
    whose arriving line meets the hypothesis line at or before the pin means
    it is too large.  Acceptance normally needs two readable probes sitting
    exactly on the line: with the pinned left endpoint that makes three
    collinear points, which a concave function can only realize by running
    along the line.  Probes that overflow the ring caps carry no value and
    are skipped; a cap segment whose readable probes run out is returned
    with solid=False and the caller arbitrates it against the cap residue.
    """
    hi, w_ev = None, None
    for _ in range(_MAX_WALK_EVENTS):
        if hi is None:
            mu_ev, w_ev = _line_events(dec, w, s)
            hi = lam + mu_ev
        cands = ([hi] if w_ev < TWO else []) + \
            _lattice_scales(lam, hi, F_local.ring.N)
        pins, broke = [], None
        for t_abs in cands:
            d_t = _probe_capped(F_local, t_abs, cache)
            if d_t is None:
                continue
            v_t = d_t.wbar
            w_t = w + s * (t_abs - lam)
            if v_t > w_t:
                return None
            if v_t < w_t:
                broke = (t_abs, v_t, d_t)
                break
            pins.append((t_abs, v_t, d_t))
            if len(pins) == 2:
                break
        if broke is None:
            if w_ev == TWO:
                return "cap", (hi, len(pins) == 2)
            if len(pins) < 2:
                raise RuntimeError(
                    "cannot pin the walk segment with readable probes")
            return "advance", max(pins)
        # probe below the line: a break hides before it; intersect the
        # hypothesis line with the arriving line through the probe point
        t_abs, v_t, d_t = broke
        assert s >= 3, "slope-1 segment cannot hide a break"
        _, s_arr = _odd_minimum_degrees(d_t)
        s_arr = min(s_arr, s - 2)
        mu_b = Fraction(v_t - w - s_arr * (t_abs - lam), s - s_arr)
        if mu_b <= 0:
            # the arriving line passes through the pin itself: the defect
            # never leaves it with slope s
            return None
        assert mu_b < t_abs - lam, "break localized outside its segment"
        hi, w_ev = lam + mu_b, w + s * mu_b
    raise RuntimeError("fiber walk failed to localize a break")


def _leaf_check(Pd, h0, s_cap: int):
    """Artin-Schreier pair of a cap read, checked against the cap slope."""
    assert h0, "unit part vanishes at a smooth unmarked point"
    ras = artin_schreier_pair(Pd, GFLaurent(Pd.field, {0: h0}))
    assert ras.genus == (s_cap - 1) // 2, "leaf genus disagrees with slope"
    assert not ras.split and ras.two_rank == 0, "type-(d) leaf must be " \
        "irreducible of 2-rank 0"
    assert len(ras.poles) == 1 and ras.poles[0][1] == s_cap, \
        "type-(d) Artin-Schreier form should have one pole of order s_cap"
    return ras


def _event_walk(F_local: LaurentSeries, expect_gamma):
    """Confirmed walk data: gamma, s1, break events, and the cap hit.

    events = [(lam, value, decomposition, s_left, s_right)] for each break
    of the defect function below 2; cap = (eps, s_cap, Pd, h0) at the first
    scale where the defect reaches 2, with (Pd, h0) the Artin-Schreier read
    (None when s_cap = 1 and the tail carries no genus).  A provisionally
    accepted cap segment counts only if its residue read passes the leaf
    checks; otherwise the walk falls through to the next candidate slope.
    """
    cache = {}
    dec = _probe(F_local, Fraction(0))
    gamma = dec.wbar
    assert expect_gamma is None or gamma == expect_gamma, \
        "square defect changed under the blow-up translation"
    assert gamma < TWO, "fiber walk needs square defect below 2"
    lam, w = Fraction(0), gamma
    s1 = None
    prev_s = None
    events = []
    for _ in range(_MAX_WALK_EVENTS):
        cands = sorted((i for i, c in dec.G.coeffs.items()
                        if i % 2 and not c.is_payload_zero and c.val() == w),
                       reverse=True)
        if prev_s is not None:
            cands = [s for s in cands if s <= prev_s]
        assert cands, "no odd term achieves the square defect"
        accepted = None
        for s in cands:
            res = _try_slope(F_local, lam, w, dec, s, cache)
            if res is None:
                continue
            kind, payload = res
            if kind == "cap":
                eps, solid = payload
                if s >= 3:
                    try:
                        Pd, h0 = _cap_read(F_local, eps)
                        _leaf_check(Pd, h0, s)
                    except (AssertionError, RuntimeError,
                            PrecisionExhausted, CapExceeded):
                        if solid:
                            raise
                        continue
                else:
                    Pd, h0 = None, None
                accepted = (s, "cap", (eps, Pd, h0))
            else:
                accepted = (s, "advance", payload)
            break
        assert accepted is not None, "no slope hypothesis survives probing"
        s, kind, payload = accepted
        if s1 is None:
            s1 = s
        if prev_s is not None and s < prev_s:
            events.append((lam, w, dec, prev_s, s))
        prev_s = s
        if kind == "cap":
            eps, Pd, h0 = payload
            return gamma, s1, events, (eps, s, Pd, h0)
        lam, w, dec = payload
    raise RuntimeError("fiber walk failed to reach the cap")


def _compose_center(b, c_t, off):
    """Offset of a side-branch point in the parent coordinate: 2^b (c_t + off)."""
    rj = join_ring(c_t.ring, off.ring)
    s = add(refine(c_t, rj), refine(off, rj))
    return mul(pow2(rj, b), s)


def _shift_subtree(root: FiberComponent, b, c_t):
    """Re-express a side subtree in the parent walk coordinate."""
    stack = [root]
    while stack:
        n = stack.pop()
        n.lam = n.lam + b
        n.center = _compose_center(b, c_t, n.center)
        stack.extend(ch for _, _, ch in n.children)


def _splice_unary(th, ann, node):
    """Drop scaffolding: a type-(c) node with one child merges into its edge."""
    node.children = [_splice_unary(t, a, ch) for t, a, ch in node.children]
    if node.kind == "c" and len(node.children) == 1:
        t2, _, ch = node.children[0]
        return (th + t2, "inferred", ch)
    assert node.children or node.kind == "d", "type-(c) leaf survived"
    return (th, ann, node)


def _break_sides(dec_b, v, s_l, s_r, max_deg):
    """Side-branch roots (residue, multiplicity, degree) at a walk break.

    The break residue Q collects the odd terms at the minimum; its nonzero
    critical points dQ/du = u^(s_r - 1) * W(u) carry the local genus that
    leaves the chain at this scale.
    """
    Qfull = reduce(dec_b.G, v)
    assert all(j % 2 for j in Qfull.coeffs), \
        "break residue has an even term at the minimum"
    # digits below s_r are probe-rejected phantoms, not obstructions
    Q = GFLaurent(Qfull.field,
                  {j: q for j, q in Qfull.coeffs.items() if j >= s_r})
    assert Q.deg() == s_l and min(Q.coeffs) == s_r, \
        "break residue support disagrees with the confirmed slopes"
    W = [Q.get(s_r + j) if (s_r + j) % 2 else 0
         for j in range(s_l - s_r + 1)]
    assert poly_deg(W) == s_l - s_r and W[0], "derivative support mismatch"
    side_roots, _ = roots_with_multiplicity(Q.field, W, max_deg)
    return side_roots


def _lone_tail(side_roots, s_l, s_r, s_cap):
    """True when a final break is the signature of an off-center chart.

    The whole slope drop concentrates in one rational side point and the
    continuation past the break caps at slope 1 with no genus: then the
    break is an artifact of the chart center sitting one residue digit
    short of the true center, and recentering reproduces the same picture
    one digit deeper, with the break scale marching geometrically toward
    the unique-leaf clearance.
    """
    return (s_cap == 1 and s_r == 1 and len(side_roots) == 1
            and side_roots[0][1] == s_l - 1 and side_roots[0][2] == 1)


def fiber_tree(F_local: LaurentSeries, *, _depth: int = 0,
               _expect_gamma=None, _recenter: int = 0) -> FiberTree:
    """Blow-up tree over a smooth unmarked point with positive local genus.

    F_local is the ambient equation translated so the point is at 0, with
    v(F) = 0 and nonzero constant residue.  The returned tree is stable:
    scale-chain components that carry no genus and no branching are spliced
    into their edges, so every leaf is a positive-genus type (d).
    """
    assert _depth < 32, "fiber recursion failed to terminate"
    gamma, s1, walk_events, cap = _event_walk(F_local, _expect_gamma)
    eps, s_cap, Pd, h0 = cap
    lg = (s1 - 1) // 2
    assert s1 % 2 == 1 and lg > 0, \
        "fiber tree called at a point of local genus 0"
    max_deg = F_local.ring.caps.max_residue_degree

    if walk_events and s_cap == 1:
        b, v, dec_b, s_l, s_r = walk_events[-1]
        if s_r == 1 and s_l >= 5 and _lone_tail(
                _break_sides(dec_b, v, s_l, s_r, max_deg), s_l, s_r, s_cap):
            # genus (s_l - 1) / 2 >= 2 may still split in a deeper chart,
            # so walk again around the improved center
            if _recenter >= _MAX_RECENTER:
                raise CapExceeded(
                    "fiber center needs more digits than the ring caps allow")
            sides = _break_sides(dec_b, v, s_l, s_r, max_deg)
            c_t = subst_scale(F_local, b).ring.teichmuller_elem(sides[0][0])
            off = _compose_center(b, c_t, F_local.ring.zero())
            return fiber_tree(
                subst_translate(laurent_refine(F_local, off.ring), off),
                _depth=_depth, _expect_gamma=gamma, _recenter=_recenter + 1)

    nodes = []
    base_ring = F_local.ring
    s_left = s1
    for b, v, dec_b, s_l, s_r in walk_events:
        assert s_l == s_left, "left slope disagrees with the break telescope"
        node = FiberComponent("c", b, v, 0, False,
                              center=dec_b.G.ring.zero())
        side_roots = _break_sides(dec_b, v, s_l, s_r, max_deg)
        covered = 0
        if _lone_tail(side_roots, s_l, s_r, s_cap):
            # off-center tail: genus 1 cannot split again, so every deeper
            # chart repeats the pattern and the telescoped subtree is a
            # lone genus-1 leaf at the unique-leaf clearance past the break
            assert s_l == 3, "lone tail at higher slope escaped recentering"
            cbar, mult, _ = side_roots[0]
            c_t = subst_scale(F_local, b).ring.teichmuller_elem(cbar)
            leaf2 = FiberComponent(
                "d", b + (TWO - v) / 3, TWO, 1, False, [], pole_order=3,
                center=_compose_center(b, c_t, base_ring.zero()))
            node.children.append(((TWO - v) / 3, "paper-exact", leaf2))
            covered = mult
        else:
            for cbar, mult, e in side_roots:
                assert mult % 2 == 0, "odd multiplicity in fiber recursion"
                if e == 1:
                    F2 = F_local
                else:
                    ring2 = ring_make(base_ring.N, base_ring.d * e,
                                      base_ring.P, base_ring.caps)
                    F2 = laurent_refine(F_local, ring2)
                Fs = subst_scale(F2, b)
                c_t = Fs.ring.teichmuller_elem(cbar)
                sub = fiber_tree(subst_translate(Fs, c_t),
                                 _depth=_depth + 1, _expect_gamma=v)
                assert sub.local_genus == mult // 2, \
                    "side branch genus mismatch"
                covered += mult
                _shift_subtree(sub.root, b, c_t)
                node.children.append(
                    (sub.first_thickness, "inferred", sub.root))
        assert covered == s_l - s_r, "side roots fail to cover the slope drop"
        nodes.append(node)
        s_left = s_r

    assert s_cap == s_left, "cap slope disagrees with the break telescope"
    if s_cap >= 3:
        ras = _leaf_check(Pd, h0, s_cap)
        leaf = FiberComponent("d", eps, TWO, ras.genus, False, [],
                              pole_order=s_cap, center=base_ring.zero())
    else:
        leaf = None      # genus-0 tail: no component of the stable fiber

    if leaf is not None and not nodes:
        th, ann, root = eps, "paper-exact", leaf
    else:
        assert nodes, "fiber walk found neither breaks nor a genus leaf"
        chain = nodes + ([leaf] if leaf is not None else [])
        for parent, child in zip(nodes, chain[1:]):
            parent.children.append((child.lam - parent.lam, "inferred", child))
        th, ann, root = _splice_unary(nodes[0].lam, "inferred", nodes[0])
        if root.kind == "d" and not root.children:
            expect, _ = leaf_thickness(gamma, lg, True)
            assert th == root.lam == expect, "unique-leaf thickness mismatch"
            ann = "paper-exact"

    got = sum(n.genus for n in FiberTree(lg, th, ann, root).all_components())
    assert got == lg, "fiber genera fail to telescope"
    return FiberTree(lg, th, ann, root)
