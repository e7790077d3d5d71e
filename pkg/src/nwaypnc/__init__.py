"""Adaptive physical-layer network coding for the n-way relay channel with M-PSK."""

from nwaypnc.constellation import Delta, PskConstellation, difference_set, make_constellation, pairs_realizing
from nwaypnc.fadespace import (
    SubspaceKey,
    canonicalize,
    count_formula,
    enumerate_subspaces,
    is_removable,
    removable_count_formula,
    subspace_contains,
)
from nwaypnc.hypercube import (
    ClusterMap,
    baseline_map,
    build_map_for_subspace,
    decode_others,
    exclusive_law_holds,
    fill_greedy,
    parse_map,
    removal_constraints,
    serialize_map,
)
from nwaypnc.distance import cluster_distance, d_min_fade, is_singular, min_cluster_distance, select_map

__version__ = "0.1.0"

__all__ = [
    "ClusterMap",
    "Delta",
    "PskConstellation",
    "SubspaceKey",
    "baseline_map",
    "build_map_for_subspace",
    "canonicalize",
    "cluster_distance",
    "count_formula",
    "d_min_fade",
    "decode_others",
    "difference_set",
    "enumerate_subspaces",
    "exclusive_law_holds",
    "fill_greedy",
    "is_removable",
    "is_singular",
    "make_constellation",
    "min_cluster_distance",
    "pairs_realizing",
    "parse_map",
    "removable_count_formula",
    "removal_constraints",
    "select_map",
    "serialize_map",
    "subspace_contains",
]
