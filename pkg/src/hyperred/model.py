"""Stable marked model of the line: cluster tree, double points, local equations.

The branch points of z^2 = F(x) are clustered by pairwise 2-adic distance;
proper clusters become the components of the stable marked model, edges become
double points with thickness = depth difference.  Each component and each
double point gets a normalized local equation for the square-defect machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce as _reduce

from .decomp import POINT_DOMAIN, Decomposition, odd_decompose
from .laurent import LaurentSeries, laurent_refine, make_series
from .ring import (CoeffRing, PrecisionExhausted, RElem, add, inv_unit,
                   join_ring, mul, neg, refine, val)


class _Infinity:

    def __repr__(self):
        return "inf"


INF = _Infinity()


@dataclass
class BranchSet:
    """Finite branch points in one common ring, plus the point at infinity."""

    ring: CoeffRing
    roots: list
    infinity: bool

    def __post_init__(self):
        self._dist = {}

    def distance(self, i: int, j: int) -> Fraction:
        """Certified v(r_i - r_j); PrecisionExhausted when indistinguishable."""
        key = (i, j) if i < j else (j, i)
        d = self._dist.get(key)
        if d is None:
            diff = add(self.roots[i], neg(self.roots[j]))
            if diff.exact_zero:
                raise ValueError(
                    f"branch points {i} and {j} coincide; curve not separable")
            try:
                d = diff.val()
            except PrecisionExhausted:
                raise PrecisionExhausted(
                    f"branch points {i} and {j} are indistinguishable at this "
                    "precision") from None
            self._dist[key] = d
        return d


def branch_set(roots: list, infinity: bool) -> BranchSet:
    """Unify root rings and certify pairwise distinctness."""
    if not roots:
        raise ValueError("no finite branch points")
    ring = _reduce(join_ring, (r.ring for r in roots))
    bs = BranchSet(ring, [refine(r, ring) for r in roots], infinity)
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            bs.distance(i, j)
    return bs


@dataclass
class Component:
    """One component of the stable marked model (a disk in the tree picture)."""

    members: tuple
    center: RElem
    rho: Fraction
    markings: list
    children: list = field(default_factory=list)
    parent: "Component" = None
    thickness: Fraction = None
    merged_rho: Fraction = None
    cid: int = -1

    @property
    def specials(self) -> int:
        return len(self.markings) + len(self.children) + (1 if self.parent else 0)

    def label(self) -> str:
        return f"X{self.cid}"


@dataclass
class ModelTree:
    branch: BranchSet
    root: Component
    components: list

    def __post_init__(self):
        self._poly = {}
        self._dec = {}


def _digit_key(r: RElem):
    flat = tuple(dd for a in r.pay for dd in a)
    return (sum(1 for dd in flat if dd), r.s, flat)


def _partition(bs: BranchSet, idxs, rho: Fraction):
    """Classes of the relation v(r_i - r_j) > rho (ultrametric equivalence)."""
    classes = []
    for i in idxs:
        for cls in classes:
            if bs.distance(i, cls[0]) > rho:
                cls.append(i)
                break
        else:
            classes.append([i])
    return classes


def _build(bs: BranchSet, idxs) -> Component:
    rho = min(bs.distance(i, j)
              for a, i in enumerate(idxs) for j in idxs[a + 1:])
    classes = _partition(bs, idxs, rho)
    assert len(classes) >= 2, "cluster depth was not minimal"
    center = min((bs.roots[i] for i in idxs), key=_digit_key)
    comp = Component(tuple(idxs), center, rho, [])
    for cls in sorted(classes, key=min):
        if len(cls) == 1:
            comp.markings.append(cls[0])
        else:
            child = _build(bs, cls)
            child.parent = comp
            child.thickness = child.rho - rho
            comp.children.append(child)
    return comp


def build_marked_model(branch: BranchSet) -> ModelTree:
    """Cluster, contract to stability, and index the components."""
    n = len(branch.roots) + (1 if branch.infinity else 0)
    if n < 4:
        raise ValueError(f"need at least 4 marked points, got {n}")
    root = _build(branch, list(range(len(branch.roots))))
    if branch.infinity:
        root.markings.append(INF)
    if root.specials < 3:
        # the top component is a line with 2 special points: contract it
        assert root.specials == 2
        if len(root.children) == 2:
            keep, move = root.children
            move.thickness = keep.thickness + move.thickness
            move.merged_rho = root.rho
            move.parent = keep
            keep.children.append(move)
        else:
            keep = root.children[0]
            keep.markings.extend(root.markings)   # lands at residue infinity
        keep.parent = None
        keep.thickness = None
        root = keep
    comps = []
    stack = [root]
    while stack:
        c = stack.pop()
        c.cid = len(comps)
        comps.append(c)
        stack.extend(reversed(c.children))
    for c in comps:
        assert c.specials >= 3, f"unstable component {c.label()}"
    return ModelTree(branch, root, comps)


def component_polynomial(tree: ModelTree, X: Component) -> LaurentSeries:
    """The local equation F_X(u) at X's Gauss point, content valuation 0.

    u = (x - c)/2^rho; inside roots give (u - t_k), outside roots (1 - e_k u);
    scalars are dropped (every constant is a square in the tame tower).
    """
    Fx = tree._poly.get(X.cid)
    if Fx is not None:
        return Fx
    bs = tree.branch
    ring = bs.ring
    inside = set(X.members)
    Fx = make_series(ring, {0: ring.one()})
    sc = ring.pow2(-X.rho)
    for k, r in enumerate(bs.roots):
        diff = add(r, neg(X.center))
        if k in inside:
            t_k = mul(diff, sc)
            fac = make_series(ring, {1: ring.one(), 0: neg(t_k)})
        else:
            e_k = mul(ring.pow2(X.rho), inv_unit(diff))
            fac = make_series(ring, {0: ring.one(), 1: neg(e_k)})
        Fx = Fx.mul(fac)
    tree._poly[X.cid] = Fx
    return Fx


def component_decomposition(tree: ModelTree, X: Component) -> Decomposition:
    dec = tree._dec.get(X.cid)
    if dec is None:
        dec = odd_decompose(component_polynomial(tree, X), POINT_DOMAIN)
        tree._dec[X.cid] = dec
    return dec


def component_square_defect(tree: ModelTree, X: Component) -> Fraction:
    return component_decomposition(tree, X).wbar


@dataclass
class DoublePointInfo:
    X: Component
    Y: Component
    thickness: Fraction
    parity: str
    grounded: bool
    F_dp: LaurentSeries
    m: int


def dp_local_equation(tree: ModelTree, Y: Component):
    """(F_dp, m): local equation on the edge annulus, X-side at v(y) = 0.

    m is the number of branch points on the child side; the even part of F_dp
    is Prod(1 - s_k/y) * Prod(1 - e_k y) normalized to constant coefficient
    exactly 1, and for odd m one factor y is kept in front.
    """
    X = Y.parent
    bs = tree.branch
    ring = bs.ring
    inside = set(Y.members)
    raw = make_series(ring, {0: ring.one()})
    if Y.merged_rho is None:
        sc = ring.pow2(X.rho)
        for k, r in enumerate(bs.roots):
            diff = add(r, neg(Y.center))
            if k in inside:
                s_k = mul(diff, ring.pow2(-X.rho))
                fac = make_series(ring, {0: ring.one(), -1: neg(s_k)})
            else:
                e_k = mul(sc, inv_unit(diff))
                fac = make_series(ring, {0: ring.one(), 1: neg(e_k)})
            raw = raw.mul(fac)
    else:
        # contracted chain: y is a Moebius coordinate between the two disks
        a1 = X.rho - Y.merged_rho
        for k, r in enumerate(bs.roots):
            dy = add(r, neg(Y.center))
            dx = add(r, neg(X.center))
            if k in inside:
                s_k = mul(ring.pow2(a1), mul(dy, inv_unit(dx)))
                fac = make_series(ring, {0: ring.one(), -1: neg(s_k)})
            else:
                e_k = mul(ring.pow2(-a1), mul(dx, inv_unit(dy)))
                fac = make_series(ring, {0: ring.one(), 1: neg(e_k)})
            raw = raw.mul(fac)
    c0 = raw.get(0)
    Fdp = raw.scale(inv_unit(c0))
    m = len(Y.members)
    if m % 2:
        Fdp = Fdp.shift(1)
    return Fdp, m


def classify_double_points(tree: ModelTree) -> list:
    out = []
    for Y in tree.components:
        if Y.parent is None:
            continue
        Fdp, m = dp_local_equation(tree, Y)
        even = m % 2 == 0
        grounded = False
        if even:
            grounded = (component_square_defect(tree, Y.parent) == 0
                        and component_square_defect(tree, Y) == 0)
        out.append(DoublePointInfo(Y.parent, Y, Y.thickness,
                                   "even" if even else "odd", grounded, Fdp, m))
    return out
