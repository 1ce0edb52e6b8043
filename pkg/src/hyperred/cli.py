"""Batch front end: JSON curve descriptions in, reports and DOT graphs out.

The input file lists the factors of F as monomials with exact rational
coefficients times a rational power of 2.  The pipeline builds the stable
marked reduction of z^2 = F(x) and writes report.json (graph, totals,
local-genus ledger, defect-function break tables, invariant checks) and
graph.dot (the three dual graphs as Graphviz clusters).  Rationals are
serialized as "p/q" strings, never floats; two runs on the same input and
flags produce identical bytes.
"""

import argparse
import json
import sys
from fractions import Fraction
from math import lcm
from pathlib import Path

from .gf import CapExceeded
from .laurent import make_series
from .reduction import ANNOTATION_MODES, build_reduction
from .ring import Caps, NonUnitInverse, PrecisionExhausted, ring_make
from .roots import WildRootObstruction

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_INPUT = 2

_OPTION_KEYS = ("precision", "max_ram_index", "max_residue_degree",
                "truncate", "thickness_annotations", "check_invariants")


class InputError(Exception):
    """Malformed input file or schema violation."""


def _rat(x, what):
    """Exact Fraction from an int or a "p/q" string."""
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise InputError(f"{what} must be an integer or a 'p/q' string, "
                         f"got {x!r}")
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{what}: {exc}") from exc


def _int(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise InputError(f"{what} must be an integer, got {x!r}")
    try:
        return int(x)
    except ValueError as exc:
        raise InputError(f"{what}: {exc}") from exc


def parse_input(doc: dict):
    """Validated (factors-as-monomial-lists, options) from a json document."""
    if not isinstance(doc, dict):
        raise InputError("top level must be a json object")
    unknown = set(doc) - {"factors", "options"}
    if unknown:
        raise InputError(f"unknown top-level keys {sorted(unknown)}")
    raw = doc.get("factors")
    if not isinstance(raw, list) or not raw:
        raise InputError("'factors' must be a nonempty list")
    factors = []
    for i, fac in enumerate(raw):
        if not isinstance(fac, list) or not fac:
            raise InputError(f"factor {i} must be a nonempty monomial list")
        monos = []
        for m in fac:
            if not isinstance(m, dict) or not set(m) <= \
                    {"deg", "num", "den", "pow2"}:
                raise InputError(f"factor {i}: monomials take keys "
                                 "deg/num/den/pow2")
            deg = _int(m.get("deg"), f"factor {i} deg")
            if deg < 0:
                raise InputError(f"factor {i}: negative degree {deg}")
            num = _int(m.get("num"), f"factor {i} num")
            den = _int(m.get("den", 1), f"factor {i} den")
            if den == 0:
                raise InputError(f"factor {i}: zero denominator")
            pw = _rat(m.get("pow2", 0), f"factor {i} pow2")
            monos.append((deg, num, den, pw))
        factors.append(monos)
    options = doc.get("options", {})
    if not isinstance(options, dict) or not set(options) <= set(_OPTION_KEYS):
        raise InputError(f"'options' takes keys {list(_OPTION_KEYS)}")
    return factors, options


def build_factors(factors, precision, caps: Caps):
    """Materialize the monomial lists over the smallest adequate ring."""
    den = 1
    for monos in factors:
        for deg, num, d0, pw in monos:
            v2 = (d0 & -d0).bit_length() - 1 if d0 % 2 == 0 else 0
            den = lcm(den, (pw - v2).denominator)
    ring = ring_make(den, 1, precision, caps)
    out = []
    for i, monos in enumerate(factors):
        coeffs = {}
        for deg, num, d0, pw in monos:
            c = ring.from_rational(num, d0, pw)
            coeffs[deg] = c + coeffs[deg] if deg in coeffs else c
        f = make_series(ring, coeffs)
        if f.deg() is None:
            raise InputError(f"factor {i} is identically zero")
        out.append(f)
    total = sum(f.deg() for f in out)
    if total < 3:
        raise InputError(f"total degree {total} too small: the double cover "
                         "must have genus at least 1 (degree 3 or more)")
    return ring, out


def _frac_str(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, str):
        return x
    if x is None:
        return None
    return str(Fraction(x))


def _json_ledger(ledger):
    out = []
    for ent in ledger:
        e = dict(ent)
        if e.get("dp") is not None:
            e["dp"] = list(e["dp"])
        if "sdf" in e:
            e["sdf"] = [[_frac_str(a), _frac_str(b)] for a, b in e["sdf"]]
        out.append(e)
    return out


def graph_to_json(graph):
    """Plain-data rendering of a reduction graph, rationals as strings."""
    return {
        "nodes": [{"id": n.nid, "level": n.level, "type": n.ctype,
                   "genus": n.genus, "split": n.split,
                   "square_defect": _frac_str(n.square_defect),
                   "markings": list(n.markings)} for n in graph.nodes],
        "edges": [{"a": e.a, "b": e.b, "level": e.level,
                   "thickness": _frac_str(e.thickness),
                   "annotation": e.annotation, "parity": e.parity}
                  for e in graph.edges],
    }


def make_report(graph, input_echo, options_echo, truncation):
    return {
        "schema": "hyperred/1",
        "input": input_echo,
        "options": options_echo,
        "truncation": truncation,
        "graph": graph_to_json(graph),
        "totals": dict(graph.totals),
        "ledger": _json_ledger(graph.ledger),
        "checks": [dict(c) for c in graph.checks],
    }


_CLUSTERS = (("downstairs", "line model (base)"),
             ("intermediate", "line model (refined charts)"),
             ("upstairs", "double cover"))


def _dot_node(n):
    parts = [n.nid]
    if n.ctype:
        parts.append(f"({n.ctype})")
    parts.append(f"g={n.genus}")
    if n.square_defect is not None:
        parts.append(f"w={n.square_defect}")
    if n.split:
        parts.append("split")
    if n.markings:
        parts.append("m:" + ",".join(n.markings))
    label = "\\n".join(str(p) for p in parts)
    return f'    "{n.nid}" [label="{label}"];'

def graph_to_dot(graph):
    """Graphviz digraph with one cluster per model level."""
    lines = ["digraph reduction {", "  edge [dir=none];",
             "  node [shape=box];"]
    for level, title in _CLUSTERS:
        lines.append(f"  subgraph cluster_{level} {{")
        lines.append(f'    label="{title}";')
        for n in graph.level_nodes(level):
            lines.append(_dot_node(n))
        lines.append("  }")
    for e in graph.edges:
        th = _frac_str(e.thickness)
        ann = f" ({e.annotation})" if e.level == "upstairs" else ""
        tag = f"{e.parity} " if e.parity else ""
        lines.append(f'  "{e.a}" -> "{e.b}" [label="{tag}{th}{ann}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hyperred",
        description="stable marked reduction of z^2 = F(x) over a 2-adic "
                    "valued field")
    ap.add_argument("input", help="json curve description")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--precision", type=Fraction, default=None,
                    help="digit window kept per coefficient (default 14)")
    ap.add_argument("--max-ram-index", type=int, default=None,
                    help="largest tame ramification index (default 240)")
    ap.add_argument("--max-residue-degree", type=int, default=None,
                    help="largest residue field degree (default 16)")
    ap.add_argument("--truncate", action="store_true", default=None,
                    help="run on the digit-truncated equation (certified)")
    ap.add_argument("--thickness-annotations", choices=sorted(ANNOTATION_MODES),
                    default=None, help="upstairs thickness report policy")
    ap.add_argument("--check-invariants", choices=["fast", "strict"],
                    default=None, help="strict re-runs the cross-model "
                    "identities (default strict)")
    ap.add_argument("--emit", choices=["json", "dot", "both"], default="both")
    args = ap.parse_args(argv)

    try:
        with open(args.input, "rb") as fh:
            doc = json.load(fh)
        factors, opts = parse_input(doc)
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"error: input is not valid json: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    def opt(flag, key, default):
        return flag if flag is not None else opts.get(key, default)

    try:
        precision = Fraction(opt(args.precision, "precision", 14))
        caps = Caps(_int(opt(args.max_ram_index, "max_ram_index", 240),
                         "max_ram_index"),
                    _int(opt(args.max_residue_degree, "max_residue_degree",
                             16), "max_residue_degree"))
        do_trunc = bool(opt(args.truncate, "truncate", False))
        ann = opt(args.thickness_annotations, "thickness_annotations",
                  "with-heuristic")
        level = opt(args.check_invariants, "check_invariants", "strict")
        if ann not in ANNOTATION_MODES or level not in ("fast", "strict"):
            raise InputError("bad thickness_annotations or check_invariants")
        ring, fs = build_factors(factors, precision, caps)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    options_echo = {"precision": _frac_str(precision),
                    "max_ram_index": caps.max_ram_index,
                    "max_residue_degree": caps.max_residue_degree,
                    "truncate": do_trunc, "thickness_annotations": ann,
                    "check_invariants": level}
    truncation = None
    try:
        graph = build_reduction(fs, annotations=ann,
                                strict=level == "strict", truncate=do_trunc)
        if do_trunc:
            charts = [c["name"].removeprefix("truncation ")
                      for c in graph.checks
                      if c["name"].startswith("truncation ")]
            truncation = {"applied": True, "charts": charts}
    except CapExceeded as exc:
        print(f"error: {exc}; raise --max-ram-index or --max-residue-degree",
              file=sys.stderr)
        return EXIT_PIPELINE
    except PrecisionExhausted as exc:
        print(f"error: {exc}; increase --precision", file=sys.stderr)
        return EXIT_PIPELINE
    except WildRootObstruction as exc:
        print(f"error: {exc} (wildly ramified root search is out of scope)",
              file=sys.stderr)
        return EXIT_PIPELINE
    except (NonUnitInverse, ValueError, AssertionError) as exc:
        print(f"error: pipeline invariant failed: {exc}", file=sys.stderr)
        return EXIT_PIPELINE

    report = make_report(graph, {"factors": doc["factors"]}, options_echo,
                         truncation)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    wrote = []
    if args.emit in ("json", "both"):
        p = outdir / "report.json"
        p.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        wrote.append(str(p))
    if args.emit in ("dot", "both"):
        p = outdir / "graph.dot"
        p.write_text(graph_to_dot(graph))
        wrote.append(str(p))

    t = graph.totals
    print(f"genus {t['genus']}  betti {t['betti']}  toric {t['toric_rank']}  "
          f"components {len(graph.level_nodes('upstairs'))}  "
          f"wrote {' '.join(wrote)}")
    soft = [c for c in graph.checks if not c["passed"]]
    for c in soft:
        print(f"soft-failed check: {c['name']}: {c['detail']}")
    return EXIT_OK


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
