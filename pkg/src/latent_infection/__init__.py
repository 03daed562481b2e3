"""Latent infection-state classification on networks.

Pipeline: simulate an SI cascade, reveal a random subset of node states,
prune nodes that provably escaped infection, score hidden nodes with
Infection Betweenness, and classify them from topology features.
"""

from latent_infection.graph import Graph, NetworkStats, components, generate, network_stats, parse_edge_list
from latent_infection.cascade import Cascade, Observation, observe, simulate_si
from latent_infection.reduction import ReducedGraph, is_separator, reduce_property1
from latent_infection.ib import (
    PathWeightMatrix,
    infection_betweenness,
    infection_probability,
    path_weight_matrix,
    spectral_radius,
)
from latent_infection.features import FEATURE_NAMES, FeatureMatrix, build_features
from latent_infection.classifiers import fit, predict

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "NetworkStats",
    "parse_edge_list",
    "components",
    "network_stats",
    "generate",
    "Cascade",
    "Observation",
    "simulate_si",
    "observe",
    "ReducedGraph",
    "reduce_property1",
    "is_separator",
    "PathWeightMatrix",
    "spectral_radius",
    "path_weight_matrix",
    "infection_betweenness",
    "infection_probability",
    "FEATURE_NAMES",
    "FeatureMatrix",
    "build_features",
    "fit",
    "predict",
]
