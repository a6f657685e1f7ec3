"""Removable pairing and the few-non-entered-ears tour.

One removable edge per non-entered ear, one removable pair per entered ear;
a weighted auxiliary graph with inserted degree-3 vertices turns the pair
constraint into a forced-degree join, and the tour follows by swapping the
join against the removables.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .graph import (EdgeMultiset, GraphError, MultiGraph,
                    constrained_simple_t_join, find_bridge, is_t_tour,
                    shortest_distances, shortest_path_edges)
from .ears import WellOrientedEarDecomposition


class PairingError(GraphError):
    pass


@dataclass(frozen=True)
class RemovablePairing:
    removable: frozenset          # R: edge ids
    pairs: tuple                  # disjoint 2-tuples of edge ids
    singles: frozenset            # removables not in any pair

    def check_identity(self, m_nontrivial: int, n: int, pi: int) -> bool:
        return len(self.removable) == 2 * (m_nontrivial - (n - 1)) - pi


def build_pairing(woed: WellOrientedEarDecomposition) -> RemovablePairing:
    """Lowest-id removable per non-entered ear; per entered ear the two ear
    edges at its lowest entered vertex form a pair."""
    ed = woed.ed
    singles = set()
    pairs = []
    for idx, ear in enumerate(ed.ears):
        entering = woed.entering.get(idx)
        if entering:
            v = min(w for _, w in entering)
            pos = ear.vertices.index(v)
            pairs.append(tuple(sorted((ear.edge_ids[pos - 1], ear.edge_ids[pos]))))
        else:
            singles.add(min(ear.edge_ids))
    removable = set(singles)
    for a, b in pairs:
        removable.add(a)
        removable.add(b)
    rp = RemovablePairing(frozenset(removable), tuple(sorted(pairs)),
                          frozenset(singles))
    m_nontrivial = sum(e.length for e in ed.ears)
    if not rp.check_identity(m_nontrivial, ed.g.n, woed.pi):
        raise PairingError("removable count identity failed")
    return rp


@dataclass
class AuxiliaryGraph:
    graph: MultiGraph
    weights: tuple                # per auxiliary edge id, may be negative
    new_vertices: frozenset
    d_edge: Optional[int]         # auxiliary id of the s-t patch edge
    orig_edge: dict               # auxiliary id -> original id (absent: inserted)
    targets: frozenset            # odd-degree vertices of the auxiliary graph


def build_auxiliary(woed: WellOrientedEarDecomposition,
                    pairing: RemovablePairing, s: int, t: int
                    ) -> AuxiliaryGraph:
    """Insert a degree-3 vertex per removable pair; weights -1/0/1 plus an
    s-t edge priced at their distance.  The result must be 2-edge-connected
    (checked; a bridge means an upstream bug)."""
    ed = woed.ed
    g = ed.g
    aux_edges = []                # [u, v, weight, orig eid or None]
    pos_of = {}
    for idx, ear in enumerate(ed.ears):
        for eid in ear.edge_ids:
            u, v = g.endpoints(eid)
            w = -1 if eid in pairing.singles else 1
            pos_of[eid] = len(aux_edges)
            aux_edges.append([u, v, w, eid])
    pair_of_ear = {}
    for idx, ear in enumerate(ed.ears):
        if woed.entering.get(idx):
            v = min(w for _, w in woed.entering[idx])
            pos = ear.vertices.index(v)
            pair_of_ear[idx] = (v, ear.edge_ids[pos - 1], ear.edge_ids[pos])

    next_vertex = g.n
    new_vertices = []
    for idx in sorted(pair_of_ear, reverse=True):
        v, e1, e2 = pair_of_ear[idx]
        vp = next_vertex
        next_vertex += 1
        new_vertices.append(vp)
        for eid in (e1, e2):
            row = aux_edges[pos_of[eid]]
            if row[0] == v:
                row[0] = vp
            elif row[1] == v:
                row[1] = vp
            else:
                raise PairingError(f"pair edge {eid} detached from {v}")
            row[2] = -1
        aux_edges.append([v, vp, 0, None])

    d_edge = None
    if s != t:
        dist = shortest_distances(g, s)[t]
        d_edge = len(aux_edges)
        aux_edges.append([s, t, dist, None])

    graph = MultiGraph(next_vertex,
                       [(u, v, max(w, 0)) for u, v, w, _ in aux_edges])
    bridge = find_bridge(graph)
    if bridge is not None:
        raise PairingError(f"auxiliary graph has a bridge at edge {bridge}")
    targets = frozenset(v for v in range(graph.n) if graph.degree(v) % 2)
    return AuxiliaryGraph(
        graph=graph,
        weights=tuple(w for _, _, w, _ in aux_edges),
        new_vertices=frozenset(new_vertices),
        d_edge=d_edge,
        orig_edge={i: o for i, (_, _, _, o) in enumerate(aux_edges)
                   if o is not None},
        targets=targets)


def st_tour_few_pendant(g: MultiGraph, woed: WellOrientedEarDecomposition,
                        s: int, t: int) -> tuple[EdgeMultiset, dict]:
    """Tour of at most 4/3(n-1) + 2/3 pi + 1/3 dist(s,t) edges.

    The constrained join on the auxiliary graph picks at most one edge per
    removable pair; removable join edges leave the ear skeleton, other join
    edges double it, and a shortest path replaces the patch edge if used.
    """
    pairing = build_pairing(woed)
    aux = build_auxiliary(woed, pairing, s, t)
    join = constrained_simple_t_join(aux.graph, aux.targets,
                                     aux.new_vertices, weights=aux.weights)
    cost = sum(aux.weights[e] for e in join)
    ed = woed.ed
    e_prime = [eid for ear in ed.ears for eid in ear.edge_ids]
    dist = shortest_distances(g, s)[t] if s != t else 0
    budget = Fraction(len(e_prime), 3) - Fraction(2 * len(pairing.removable), 3) \
        + Fraction(dist, 3)
    assert cost <= budget, (cost, budget)

    mapped = {aux.orig_edge[e] for e in join if e in aux.orig_edge}
    for a, b in pairing.pairs:
        assert not (a in mapped and b in mapped), "both pair edges joined"
    patch = []
    if aux.d_edge is not None and aux.d_edge in join:
        patch = shortest_path_edges(g, s, t)

    tour = EdgeMultiset()
    removable = pairing.removable
    for eid in e_prime:
        if eid in mapped and eid in removable:
            continue
        tour.add(eid)
        if eid in mapped:
            tour.add(eid)
    for eid in patch:
        k = tour.mult.get(eid, 0)
        if k >= 2:
            tour.mult[eid] = 1    # a third copy is never useful
        else:
            tour.add(eid)

    T = set() if s == t else {s, t}
    ok, why = is_t_tour(g, tour, T)
    assert ok, why
    bound = Fraction(4 * (g.n - 1), 3) + Fraction(2 * woed.pi, 3) \
        + Fraction(dist, 3)
    assert tour.size() <= bound, (tour.size(), bound)
    return tour, {
        "pairs": len(pairing.pairs),
        "singles": len(pairing.singles),
        "join_cost": cost,
        "join_budget": str(budget),
        "patched": bool(patch),
        "tour_size": tour.size(),
    }
