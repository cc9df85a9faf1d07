"""Saddle-node bifurcations: bifurcation numbers, extended normal forms and conjugacies.

The scalar pipeline locates a fold of ``x' = f(x, mu)``, computes the speed
coefficient ``p0^2 = |f_mu f_xx| / 2`` and Takens' coefficient
``a0 = 2 f_xxx / (3 f_xx^2)``, matches the model to
``y' = nu - y^2 + a y^3`` away from the fold and builds the conjugacy
between the two.  Planar systems are reduced to the scalar case on a
centre manifold, and fold curves are followed in a second parameter.
"""

from .centre_manifold import CmReduction, JordanizedSystem, cm_reduce, jordanize, polish_fold, reduce_at
from .conjugacy import (
    ConjugacySample,
    conjugacy_defect,
    conjugate_to_normal_form,
    extend_by_flow,
    flow_box_conjugacy,
    local_taylor_conjugacy,
    taylor_patch,
)
from .continuation import Branch, BranchPoint, analytic_locus_stommel, branch_numbers, continue_branch, trace_branch
from .flow import integrate, time_of_flight, transit_time
from .formal_nf import PolySeries, reduce_to_takens
from .jets import Jet1, Jet2
from .matching import match_multipliers, negative_mu_match, normal_form_curve
from .models import PlanarModel2P, ScalarModel1P, builtin, load_model, load_model_file
from .saddle_node import SaddleNodePoint, find_all_stationary, find_stationary, locate_saddle_node, takens_numbers

__version__ = "0.1.0"

__all__ = [
    "Branch", "BranchPoint", "CmReduction", "ConjugacySample", "Jet1", "Jet2", "JordanizedSystem",
    "PlanarModel2P", "PolySeries", "SaddleNodePoint", "ScalarModel1P",
    "analytic_locus_stommel", "branch_numbers", "builtin", "cm_reduce", "conjugacy_defect",
    "conjugate_to_normal_form", "continue_branch", "extend_by_flow", "find_all_stationary", "find_stationary",
    "flow_box_conjugacy", "integrate", "jordanize", "load_model", "load_model_file",
    "local_taylor_conjugacy", "locate_saddle_node", "match_multipliers", "negative_mu_match",
    "normal_form_curve", "polish_fold", "reduce_at", "reduce_to_takens", "takens_numbers",
    "taylor_patch", "time_of_flight", "trace_branch", "transit_time",
]
