"""Certified approximation pipeline for the s-t-path graph TSP."""

from .graph import (
    EdgeMultiset,
    MultiGraph,
    ProblemInstance,
    block_decompose,
    brute_force_opt,
    constrained_simple_t_join,
    contract,
    is_t_tour,
    min_t_join,
    parse_instance,
    shortest_distances,
)

__all__ = [
    "EdgeMultiset",
    "MultiGraph",
    "ProblemInstance",
    "block_decompose",
    "brute_force_opt",
    "constrained_simple_t_join",
    "contract",
    "is_t_tour",
    "min_t_join",
    "parse_instance",
    "shortest_distances",
]
