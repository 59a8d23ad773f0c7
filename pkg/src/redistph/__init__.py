"""Persistent homology of districting plans and their ensembles."""

from .errors import RedistError
from .graph_core import (
    DistrictGraph,
    DualGraph,
    Election,
    NodeRecord,
    Plan,
    build_dual_graph,
    canonical_class,
    district_graph,
    isomorphism_variety,
    republican_share,
    validate_plan,
)
from .persistence import INF, Diagram, DiagramPoint, persistence_diagram, plan_diagram, sublevel_diagram
from .metrics import Matching, bottleneck, distance_matrix, wasserstein
from .frechet import FrechetResult, frechet_functional, frechet_mean
from .chains import BiasConfig, ChainConfig, Ensemble, biased_chain, flip_step, recom_step, recursive_tree_part, run_chain
from .synth import synth_state

__version__ = "0.1.0"

__all__ = [
    "BiasConfig",
    "ChainConfig",
    "Diagram",
    "DiagramPoint",
    "DistrictGraph",
    "DualGraph",
    "Election",
    "Ensemble",
    "FrechetResult",
    "INF",
    "Matching",
    "NodeRecord",
    "Plan",
    "RedistError",
    "biased_chain",
    "bottleneck",
    "build_dual_graph",
    "canonical_class",
    "distance_matrix",
    "district_graph",
    "flip_step",
    "frechet_functional",
    "frechet_mean",
    "isomorphism_variety",
    "persistence_diagram",
    "plan_diagram",
    "recom_step",
    "recursive_tree_part",
    "republican_share",
    "run_chain",
    "sublevel_diagram",
    "synth_state",
    "validate_plan",
    "wasserstein",
]
