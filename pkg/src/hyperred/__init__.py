"""Exact 2-adic engine for hyperelliptic curves z^2 = F(x) in residue
characteristic 2: stable marked model of the line, square defect
decompositions, and the full combinatorics of the stable marked reduction."""

from .decomp import (POINT_DOMAIN, Decomposition, approx_equiv, as_core,
                     odd_decompose, square_defect_core, wbar_of)
from .gf import (ASForm, CapExceeded, GFLaurent, RationalAS,
                 artin_schreier_pair, artin_schreier_reduce,
                 artin_schreier_reduce_rational, get_field)
from .laurent import (AnnulusDomain, LaurentSeries, derivative, evaluate,
                      laurent_refine, make_series, reduce, subst_invert,
                      subst_scale, subst_translate)
from .model import (INF, BranchSet, Component, DoublePointInfo, ModelTree,
                    branch_set, build_marked_model, classify_double_points,
                    component_decomposition, component_polynomial,
                    component_square_defect, dp_local_equation)
from .reduction import (ANNOTATION_MODES, GraphEdge, GraphNode,
                        ReductionGraph, build_reduction, grounded_shortcut,
                        toric_rank, totals_check, truncate_equation)
from .ring import (Caps, PrecisionExhausted, RElem, add, inv_unit, mul, neg,
                   pow2, refine, ring_make, val)
from .roots import WildRootObstruction, find_roots, find_roots_factored
from .sdf import (PLConcaveFn, local_genus_even_dp, sdf_compute,
                  square_defect_function, upstairs_nodes_over_dp)
from .smoothfiber import (FiberComponent, FiberTree, fiber_tree, invert_local,
                          leaf_thickness, local_genus_smooth,
                          smooth_point_spectrum)
