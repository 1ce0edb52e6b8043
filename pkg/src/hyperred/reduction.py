"""Assembly of the stable marked reduction as a three-level dual graph.

The downstairs level is the stable marked model of the projective line with
the branch points marked.  The intermediate level refines it by the charts
the double cover forces: proper transforms (a), annulus charts (b) at the
interior breaks of the square defect function of each even double point, and
scale charts (c)/(d) over smooth points with positive local genus.  The
upstairs level glues the cover components over the intermediate ones, counts
nodes over every edge, contracts anything unstable, and reads off the Betti
number, the toric rank, and the ledger of local genera.
"""

from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .decomp import POINT_DOMAIN, approx_equiv, as_core, odd_decompose
from .gf import artin_schreier_pair
from .laurent import (AnnulusDomain, LaurentSeries, laurent_refine,
                      make_series, subst_scale, subst_translate)
from .model import (INF, branch_set, build_marked_model,
                    classify_double_points, component_decomposition,
                    component_polynomial)
from .ring import add, mul, neg, ring_make, truncate_val, val
from .roots import find_roots_factored
from .sdf import TWO, local_genus_even_dp, sdf_compute
from .smoothfiber import fiber_tree, invert_local, smooth_point_spectrum

_ANNOTATION_RANK = {"paper-exact": 0, "inferred": 1, "heuristic": 2}
ANNOTATION_MODES = {"paper-exact-only": 0, "with-inferred": 1,
                    "with-heuristic": 2}


@dataclass
class GraphNode:
    """One vertex of the reduction graph at one of the three levels."""

    nid: str
    level: str                      # downstairs | intermediate | upstairs
    ctype: str = None               # a | b | c | d on the intermediate level
    genus: int = 0
    split: bool = False
    square_defect: Fraction = None
    markings: list = field(default_factory=list)


@dataclass
class GraphEdge:
    """One edge; thickness is a Fraction or the string "unknown"."""

    a: str
    b: str
    level: str
    thickness: object
    annotation: str
    parity: str = None              # even | odd on double-point edges


@dataclass
class ReductionGraph:
    """Dual graphs at all three levels plus the local genus ledger."""

    nodes: list
    edges: list
    totals: dict
    ledger: list
    checks: list

    def __post_init__(self):
        self._by_id = {n.nid: n for n in self.nodes}
        assert len(self._by_id) == len(self.nodes), "node ids collide"

    def node(self, nid: str) -> GraphNode:
        return self._by_id[nid]

    def level_nodes(self, level: str):
        return [n for n in self.nodes if n.level == level]

    def level_edges(self, level: str):
        return [e for e in self.edges if e.level == level]


def _component_class(dec, max_degree: int):
    """(split, genus) of the cover over a component's generic point."""
    if dec.w_exceeds_2:
        return True, 0
    if dec.wbar == TWO:
        ras = artin_schreier_pair(*as_core(dec), max_degree=max_degree)
        return (True, 0) if ras.split else (False, ras.genus)
    return False, 0


def _occupied_residues(tree, X):
    """Residues of X taken by markings and nodes, plus an infinity flag."""
    ring = tree.branch.ring
    occ, inf_occ = set(), X.parent is not None
    for k in X.markings:
        if k is INF:
            inf_occ = True
            continue
        if tree.branch.roots[k] is X.center:
            occ.add(0)
            continue
        diff = add(tree.branch.roots[k], neg(X.center))
        v = val(diff)
        assert v <= X.rho, "marking inside a child disk"
        if v < X.rho:
            inf_occ = True       # moved here by the root contraction
        else:
            occ.add(mul(diff, ring.pow2(-X.rho)).residue())
    for ch in X.children:
        if ch.center is X.center:
            occ.add(0)
            continue
        diff = add(ch.center, neg(X.center))
        occ.add(0 if val(diff) > X.rho else
                mul(diff, ring.pow2(-X.rho)).residue())
    return occ, inf_occ


def _even_twist(F: LaurentSeries) -> LaurentSeries:
    """Multiply by an even power of x so the series becomes a polynomial."""
    ld = F.ldeg()
    if ld is None or ld >= 0:
        return F
    return F.shift(-2 * (ld // 2))


def _digit_truncate(F: LaurentSeries, alpha=Fraction(0)) -> LaurentSeries:
    """Drop every digit that stays above valuation 2 on the whole window.

    The term x^i contributes v + i*lambda for lambda in [0, alpha], so a
    digit is inert exactly when v + min(0, i*alpha) > 2.
    """
    coeffs = {}
    for i, c in F.coeffs.items():
        t = truncate_val(c, TWO - min(i, 0) * alpha)
        if not t.is_payload_zero:
            coeffs[i] = t
    return make_series(F.ring, coeffs)


def _fiber_scan(Fx: LaurentSeries, dec, occupied: set):
    """Fiber trees over the unoccupied spectrum residues of one chart."""
    ring = Fx.ring
    out = []
    for cbar, mult, e in smooth_point_spectrum(
            dec, ring.caps.max_residue_degree):
        if e == 1 and cbar in occupied:
            continue
        assert mult % 2 == 0, "branch points exhaust the odd spectrum"
        if e == 1:
            F2 = Fx
        else:
            ring2 = ring_make(ring.N, ring.d * e, ring.P, ring.caps)
            F2 = laurent_refine(Fx, ring2)
        c_t = F2.ring.teichmuller_elem(cbar)
        ft = fiber_tree(subst_translate(F2, c_t))
        assert 2 * ft.local_genus == mult, \
            "fiber genus disagrees with the spectrum multiplicity"
        out.append((cbar, e, ft))
    return out


def _infinity_fiber(tree, X, dec):
    """Fiber tree at residue infinity of the root component, if any."""
    Finv = invert_local(component_polynomial(tree, X))
    dec_inv = odd_decompose(Finv, POINT_DOMAIN)
    assert dec_inv.wbar == dec.wbar, "square defect depends on the chart"
    for cbar, mult, e in smooth_point_spectrum(
            dec_inv, Finv.ring.caps.max_residue_degree):
        if cbar == 0 and e == 1:
            assert mult % 2 == 0, "infinity is unmarked yet branched"
            ft = fiber_tree(Finv)
            assert 2 * ft.local_genus == mult
            return ft
    return None


def grounded_shortcut(dp) -> dict:
    """Closed-form chart data over a grounded double point of local genus 1.

    Returns interior breaks [(lam, wbar, genus)], chain edges
    [(thickness, two_nodes)], and the lone leaf {"thickness", "genus"} or
    None; the generic path must reproduce it exactly.
    """
    a = Fraction(dp.thickness)
    assert dp.grounded, "shortcut needs a grounded double point"
    if a <= 4:
        genus_b = 1 if a == 4 else 0
        return {"breaks": [(a / 2, a / 2, genus_b)],
                "edges": [(a / 2, False), (a / 2, False)],
                "leaf": None if a == 4 else
                        {"thickness": (4 - a) / 6, "genus": 1}}
    return {"breaks": [(Fraction(2), TWO, 0), (a - 2, TWO, 0)],
            "edges": [(Fraction(2), False), (a - 4, True), (Fraction(2), False)],
            "leaf": None}


def build_reduction(factors: list, *, annotations: str = "with-heuristic",
                    strict: bool = True,
                    truncate: bool = False) -> ReductionGraph:
    """Full pipeline from a factored equation to the three-level graph.

    With truncate=True every chart equation is digit-truncated before the
    local analysis, under a certified pointwise-v>2 equivalence on its
    window; the output graph must not change.
    """
    allowed_rank = ANNOTATION_MODES[annotations]
    roots = find_roots_factored(factors)
    deg = sum(f.deg() for f in factors)
    infinity = deg % 2 == 1
    g = (deg - 1) // 2 if infinity else deg // 2 - 1
    assert g >= 1, "the cover must have positive genus"
    tree = build_marked_model(branch_set(roots, infinity))
    max_deg = tree.branch.ring.caps.max_residue_degree

    nodes, edges, ledger, checks = [], [], [], []
    inter_nodes = {}          # intermediate nid -> GraphNode
    inter_edges = []          # {"edge", "two", "up_th", "up_ann"}

    def check(name, ok, detail="", fatal=True):
        checks.append({"name": name, "passed": bool(ok),
                       "detail": "" if ok else str(detail), "fatal": fatal})
        if fatal:
            assert ok, f"{name}: {detail}"

    def add_node(n: GraphNode) -> GraphNode:
        nodes.append(n)
        if n.level == "intermediate":
            inter_nodes[n.nid] = n
        return n

    def add_inter_edge(a, b, th, ann, *, parity=None, two=False,
                       up_th=None, up_ann=None):
        e = GraphEdge(a, b, "intermediate", th, ann, parity)
        edges.append(e)
        inter_edges.append({"edge": e, "two": two,
                            "up_th": up_th, "up_ann": up_ann})

    def emit_fiber(host_id, prefix, ft, exact_up=False):
        """Intermediate nodes and edges of one fiber tree."""
        counter = [0]

        def rec(node, parent_id, th, ann):
            nid = f"{prefix}.{counter[0]}"
            counter[0] += 1
            add_node(GraphNode(nid, "intermediate", node.kind, node.genus,
                               node.split, node.wbar))
            hint = (th / 2, "paper-exact") if exact_up else (None, None)
            add_inter_edge(parent_id, nid, th, ann,
                           up_th=hint[0], up_ann=hint[1])
            for t2, a2, ch in node.children:
                rec(ch, nid, t2, a2)
        rec(ft.root, host_id, ft.first_thickness, ft.first_annotation)

    # ---- components: class, fibers, generic genus ----------------------
    comp_info = {}
    for X in tree.components:
        dec = component_decomposition(tree, X)
        split, genus = _component_class(dec, max_deg)
        if X.markings:
            assert dec.wbar == 0, "marked component with nonzero square defect"
        occ, inf_occ = _occupied_residues(tree, X)
        fibers = []
        if not split and dec.wbar < TWO:
            Fx = component_polynomial(tree, X)
            if truncate:
                Fx, cert = truncate_equation(Fx, _digit_truncate(Fx))
                check(f"truncation d{X.cid}", True, cert, fatal=False)
            fibers = _fiber_scan(Fx, dec, occ)
            if X.parent is None and not inf_occ:
                ft = _infinity_fiber(tree, X, dec)
                if ft is not None:
                    fibers.append(("inf", 1, ft))
        comp_info[X.cid] = {"dec": dec, "split": split, "genus": genus,
                            "fibers": fibers}

        marks = ["inf" if k is INF else f"r{k}" for k in X.markings]
        add_node(GraphNode(f"d{X.cid}", "downstairs", None, 0, False,
                           dec.wbar, marks))
        add_node(GraphNode(f"i{X.cid}", "intermediate", "a", genus, split,
                           dec.wbar, list(marks)))
        for mk in marks:
            ledger.append({"point": f"d{X.cid}:{mk}", "kind": "marking",
                           "comp": X.cid, "dp": None, "local_genus": 0})
        ledger.append({"point": f"d{X.cid}:generic", "kind": "generic",
                       "comp": X.cid, "dp": None,
                       "local_genus": -1 if split else genus})
        for j, (cbar, e, ft) in enumerate(fibers):
            emit_fiber(f"i{X.cid}", f"i{X.cid}.f{j}", ft)
            ledger.append({"point": f"d{X.cid}:x={cbar}" +
                                    (f"(deg{e})" if e > 1 else ""),
                           "kind": "smooth", "comp": X.cid, "dp": None,
                           "local_genus": ft.local_genus})

    # ---- double points --------------------------------------------------
    for dp in classify_double_points(tree):
        X, Y = dp.X, dp.Y
        label = f"d{X.cid}-d{Y.cid}"
        edges.append(GraphEdge(f"d{X.cid}", f"d{Y.cid}", "downstairs",
                               dp.thickness, "paper-exact", dp.parity))
        if dp.parity == "odd":
            check(f"odd dp {label} zero defect",
                  comp_info[X.cid]["dec"].wbar == 0
                  and comp_info[Y.cid]["dec"].wbar == 0)
            add_inter_edge(f"i{X.cid}", f"i{Y.cid}", dp.thickness,
                           "paper-exact", parity="odd",
                           up_th=dp.thickness / 2, up_ann="paper-exact")
            ledger.append({"point": f"dp {label}", "kind": "odd-dp",
                           "comp": None, "dp": (X.cid, Y.cid),
                           "local_genus": 0})
            continue

        if truncate:
            alpha = Fraction(dp.thickness)
            Ft, cert = truncate_equation(dp.F_dp,
                                         _digit_truncate(dp.F_dp, alpha),
                                         AnnulusDomain(alpha))
            check(f"truncation dp {label}", True, cert, fatal=False)
            dp = replace(dp, F_dp=Ft)
        fn = sdf_compute(dp)
        assert fn.values[0] == comp_info[X.cid]["dec"].wbar, \
            "defect function does not start at the parent defect"
        assert fn.values[-1] == comp_info[Y.cid]["dec"].wbar, \
            "defect function does not end at the child defect"
        lg = local_genus_even_dp(fn)
        if dp.grounded:
            check(f"grounded dp {label} positive genus", lg > 0)
        exact_up = dp.grounded and lg == 1 and dp.thickness <= 4

        ibs = fn.interior_breaks()
        pieces = 0
        b_data = []
        for j, (lam, valv) in enumerate(ibs):
            bid = f"b{Y.cid}.{j}"
            dec_b = odd_decompose(subst_scale(dp.F_dp, lam), POINT_DOMAIN)
            assert dec_b.wbar == valv and not dec_b.w_exceeds_2, \
                "break value disagrees with the chart defect"
            if valv == TWO:
                ras = artin_schreier_pair(*as_core(dec_b), max_degree=max_deg)
                assert not ras.split, "chart between poles cannot split"
                bg, fibers = ras.genus, []
            else:
                bg = 0
                Fb = _even_twist(subst_scale(dp.F_dp, lam))
                dec_p = odd_decompose(Fb, POINT_DOMAIN)
                assert dec_p.wbar == valv
                fibers = _fiber_scan(Fb, dec_p, {0})
            add_node(GraphNode(bid, "intermediate", "b", bg, False, valv))
            for k, (cbar, e, ft) in enumerate(fibers):
                emit_fiber(bid, f"{bid}.f{k}", ft, exact_up=exact_up)
            pieces += bg + sum(ft.local_genus for _, _, ft in fibers)
            b_data.append((lam, valv, bg, fibers))

        node_ids = ([f"i{X.cid}"] + [f"b{Y.cid}.{j}" for j in range(len(ibs))]
                    + [f"i{Y.cid}"])
        edge_data = []
        for k, slope in enumerate(fn.slopes):
            two = slope == 0
            th_k = fn.breaks[k + 1] - fn.breaks[k]
            if comp_info[X.cid]["split"] and k == 0:
                assert two, "split side must meet a horizontal segment"
            if comp_info[Y.cid]["split"] and k == len(fn.slopes) - 1:
                assert two, "split side must meet a horizontal segment"
            hint = ((th_k / 2, "paper-exact") if exact_up and not two
                    else (None, None))
            add_inter_edge(node_ids[k], node_ids[k + 1], th_k, "paper-exact",
                           parity="even", two=two,
                           up_th=hint[0], up_ann=hint[1])
            pieces += 1 if two else 0
            edge_data.append((th_k, two))
        check(f"dp {label} local genus pieces", pieces == lg,
              f"{pieces} != {lg}")
        ledger.append({"point": f"dp {label}", "kind": "even-dp",
                       "comp": None, "dp": (X.cid, Y.cid), "local_genus": lg,
                       "sdf": list(zip(fn.breaks, fn.values))})

        if strict and dp.grounded and lg == 1:
            want = grounded_shortcut(dp)
            leaf = None
            if len(b_data) == 1 and len(b_data[0][3]) == 1:
                _, _, ft = b_data[0][3][0]
                if ft.root.kind == "d" and not ft.root.children:
                    leaf = {"thickness": ft.first_thickness,
                            "genus": ft.root.genus}
            got = {"breaks": [(lam, v, bg) for lam, v, bg, _ in b_data],
                   "edges": edge_data, "leaf": leaf}
            check(f"grounded shortcut {label}", got == want,
                  f"{got} != {want}")

    # ---- upstairs: copies, pairings, contraction ------------------------
    copies, up_nodes, unum = {}, [], [0]
    for nid, n in inter_nodes.items():
        ids = []
        for _ in range(2 if n.split else 1):
            uid = f"u{unum[0]}"
            unum[0] += 1
            un = GraphNode(uid, "upstairs", None, 0 if n.split else n.genus,
                           False, None, list(n.markings))
            up_nodes.append(un)
            ids.append(uid)
        copies[nid] = ids

    def resolve_up(rec):
        if rec["up_th"] is not None:
            return rec["up_th"], rec["up_ann"]
        th = rec["edge"].thickness
        if rec["two"]:
            return th, "inferred"
        return th / 2, "heuristic"

    up_edges, flippable = [], []
    for rec in inter_edges:
        ca, cb = copies[rec["edge"].a], copies[rec["edge"].b]
        uth, uann = resolve_up(rec)
        if not rec["two"]:
            assert len(ca) == 1 and len(cb) == 1, \
                "connected node next to a split component"
            up_edges.append([ca[0], cb[0], uth, uann])
        else:
            if len(ca) == 2 and len(cb) == 2:
                flippable.append(len(up_edges))
            up_edges.append([ca[0], cb[0], uth, uann])
            up_edges.append([ca[-1], cb[-1], uth, uann])

    def component_count(edge_list):
        parent = {u.nid: u.nid for u in up_nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x
        for a, b, *_ in edge_list:
            parent[find(a)] = find(b)
        return len({find(u.nid) for u in up_nodes})

    for _ in range(len(flippable) + 1):
        cc = component_count(up_edges)
        if cc == 1:
            break
        for idx in flippable:
            trial = [list(e) for e in up_edges]
            trial[idx + 1][0], trial[idx][0] = trial[idx][0], trial[idx + 1][0]
            if component_count(trial) < cc:
                up_edges = trial
                break
        else:
            raise AssertionError("cover graph cannot be connected")
    check("upstairs connected", component_count(up_edges) == 1)

    # contract unstable pieces: genus 0 with fewer than 3 special points
    alive = {u.nid: u for u in up_nodes}
    while True:
        degc = Counter()
        for a, b, *_ in up_edges:
            degc[a] += 1
            degc[b] += 1
        u = next((x for x in alive.values()
                  if x.genus == 0 and degc[x.nid] + len(x.markings) < 3),
                 None)
        if u is None:
            break
        assert degc[u.nid] == 2 and not u.markings, \
            f"unstable upstairs component {u.nid} is not a plain chain link"
        ends, rest = [], []
        for e in up_edges:
            (ends if u.nid in e[:2] else rest).append(e)
        (a1, b1, t1, n1), (a2, b2, t2, n2) = ends
        w1 = b1 if a1 == u.nid else a1
        w2 = b2 if a2 == u.nid else a2
        th = (t1 + t2 if isinstance(t1, Fraction) and isinstance(t2, Fraction)
              else "unknown")
        ann = max(n1, n2, key=lambda s: _ANNOTATION_RANK[s])
        rest.append([w1, w2, th, ann])
        up_edges = rest
        del alive[u.nid]
    up_nodes = [u for u in up_nodes if u.nid in alive]

    # ---- totals, ledger checks ------------------------------------------
    two_count = sum(1 for r in inter_edges if r["two"])
    split_count = sum(1 for n in inter_nodes.values() if n.split)
    betti = len(up_edges) - len(up_nodes) + 1
    check("betti count formula", betti == two_count - split_count,
          f"graph {betti}, count {two_count - split_count}")
    check("upstairs arithmetic genus",
          sum(u.genus for u in up_nodes) + betti == g,
          f"{sum(u.genus for u in up_nodes)} + {betti} != {g}")

    total_local = sum(e["local_genus"] for e in ledger)
    check("local genus ledger", total_local == g, f"{total_local} != {g}")

    dplist = [e for e in ledger if e["dp"] is not None]
    grounded_dps = [dp for dp in classify_double_points(tree) if dp.grounded]
    if len(grounded_dps) == g:
        thick = sum(1 for dp in grounded_dps if dp.thickness > 4)
        check("grounded toric count", betti == thick, f"{betti} != {thick}")

    for X in tree.components:
        if X.parent is None or X.children:
            continue
        n_marks = len(X.markings)
        side = sum(e["local_genus"] for e in ledger
                   if e["comp"] == X.cid and e["kind"] != "marking")
        if n_marks % 2:
            check(f"odd leaf d{X.cid} identity",
                  side == (n_marks - 1) // 2, f"{side}")
        else:
            check(f"even leaf d{X.cid} bound", side <= n_marks // 2 - 1,
                  f"{side} > {n_marks // 2 - 1}")
        check(f"leaf d{X.cid} parity refinement",
              (Fraction(side) == Fraction(n_marks - 1, 2)) == (n_marks % 2 == 1))

    def subtree_cids(Y):
        out, stack = set(), [Y]
        while stack:
            c = stack.pop()
            out.add(c.cid)
            stack.extend(c.children)
        return out

    for dp in classify_double_points(tree):
        if dp.parity != "odd":
            continue
        cids = subtree_cids(dp.Y)
        side = sum(e["local_genus"] for e in ledger
                   if (e["comp"] in cids) or
                      (e["dp"] is not None and e["dp"][1] in cids
                       and e["dp"][1] != dp.Y.cid))
        want = (dp.m - 1) // 2
        check(f"odd dp d{dp.X.cid}-d{dp.Y.cid} side sum", side == want,
              f"{side} != {want}", fatal=False)

    # annotation filter on upstairs thicknesses
    for a, b, th, ann in up_edges:
        if isinstance(th, Fraction) and _ANNOTATION_RANK[ann] > allowed_rank:
            th = "unknown"
        edges.append(GraphEdge(a, b, "upstairs", th, ann))
    nodes.extend(up_nodes)

    n_marked = len(tree.branch.roots) + (1 if infinity else 0)
    assert n_marked == 2 * g + 2, "marked point count disagrees with genus"
    totals = {"genus": g, "betti": betti, "toric_rank": betti,
              "degree": deg, "marked_points": n_marked,
              "local_genus_sum": total_local,
              "double_points": len(dplist)}
    return ReductionGraph(nodes, edges, totals, ledger, checks)


def toric_rank(graph: ReductionGraph) -> int:
    """Betti number of the upstairs dual graph."""
    return graph.totals["betti"]


def totals_check(graph: ReductionGraph) -> dict:
    """Per-point local genera, their sum, and every recorded invariant."""
    total = sum(e["local_genus"] for e in graph.ledger)
    hard = [c for c in graph.checks if c["fatal"]]
    soft = [c for c in graph.checks if not c["fatal"]]
    return {"totals": dict(graph.totals),
            "local_genus_sum": total,
            "ledger": list(graph.ledger),
            "hard_checks_passed": all(c["passed"] for c in hard),
            "soft_checks_passed": all(c["passed"] for c in soft),
            "checks": list(graph.checks)}


def truncate_equation(F: LaurentSeries, Ft: LaurentSeries,
                      domain=POINT_DOMAIN):
    """Certify Ft as a replacement for F on the window (pointwise v > 2)."""
    if not approx_equiv(F, Ft, domain, pointwise=True):
        raise ValueError("truncation certificate failed: the difference "
                         "reaches valuation 2 on the window")
    return Ft, f"pointwise v>2 certificate on [0, {domain.alpha}]"
