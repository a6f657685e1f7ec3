"""Minimum-weight perfect matching on small dense instances.

Two exact backends: a bitmask dynamic program for up to 16 nodes, and a
reduction to networkx's blossom-based maximum-weight matching above that.
Weights must be integers (all callers in this package pair vertices by
integer graph distances).
"""

from __future__ import annotations

from typing import Hashable, Mapping, Optional, Sequence, Tuple

import networkx as nx

_DP_LIMIT = 16

Pair = Tuple[Hashable, Hashable]


def min_weight_perfect_matching(
    nodes: Sequence[Hashable],
    weights: Mapping[frozenset, int],
) -> Optional[list[Pair]]:
    """Return a minimum-weight perfect matching or None if none exists.

    ``weights`` maps frozenset({a, b}) to an integer weight; missing pairs
    are treated as non-edges.  Nodes are matched deterministically: among
    optimal matchings the one found is fixed by node order.
    """
    nodes = list(nodes)
    if len(nodes) % 2 != 0:
        return None
    if not nodes:
        return []
    if len(nodes) <= _DP_LIMIT:
        return _dp_matching(nodes, weights)
    return _blossom_matching(nodes, weights)


def _dp_matching(nodes, weights):
    k = len(nodes)
    full = (1 << k) - 1
    INF = float("inf")
    dp = [INF] * (full + 1)
    choice = [None] * (full + 1)
    dp[0] = 0
    for mask in range(1, full + 1):
        low = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << low)
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m ^= 1 << j
            key = frozenset((nodes[low], nodes[j]))
            if key not in weights:
                continue
            prev = dp[rest ^ (1 << j)]
            if prev is INF:
                continue
            cand = prev + weights[key]
            if cand < dp[mask]:
                dp[mask] = cand
                choice[mask] = (low, j)
    if dp[full] is INF:
        return None
    pairs = []
    mask = full
    while mask:
        low, j = choice[mask]
        pairs.append((nodes[low], nodes[j]))
        mask ^= (1 << low) | (1 << j)
    return pairs


def _blossom_matching(nodes, weights):
    graph = nx.Graph()
    graph.add_nodes_from(range(len(nodes)))
    index = {v: i for i, v in enumerate(nodes)}
    usable = []
    for key, w in weights.items():
        a, b = tuple(key)
        if a in index and b in index:
            usable.append((index[a], index[b], int(w)))
    if not usable:
        return None
    top = max(abs(w) for _, _, w in usable) + 1
    for i, j, w in usable:
        graph.add_edge(i, j, weight=top - w)
    mate = nx.max_weight_matching(graph, maxcardinality=True, weight="weight")
    if 2 * len(mate) != len(nodes):
        return None
    return sorted((nodes[min(i, j)], nodes[max(i, j)]) for i, j in mate)
