"""Multigraph core: T-joins, tours, contraction, blocks, exact small oracle.

Vertices are dense integers 0..n-1.  Edges carry stable integer ids (their
position in the edge list) so that edge multisets survive contraction and
subgraph bookkeeping via explicit id maps.  All values are immutable after
construction and all operations are pure.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .matching import min_weight_perfect_matching


class GraphError(Exception):
    """Base error for structural problems."""


class UnreachableVertexError(GraphError):
    def __init__(self, vertex: int):
        self.vertex = vertex
        super().__init__(f"vertex {vertex} is unreachable from the source")


class ParityError(GraphError):
    """Raised when a join target set has odd cardinality."""


class InfeasibleJoinError(GraphError):
    """No join satisfying the degree constraints exists (pipeline bug)."""


class OracleLimitError(GraphError):
    """Instance exceeds the configured exact-oracle size limit."""


class ParseError(GraphError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MultiGraph:
    """Undirected multigraph with stable edge ids and integer weights >= 0.

    Parallel edges are allowed (distinct ids); self-loops are not.
    """

    __slots__ = ("n", "edges", "_adj")

    def __init__(self, n: int, edges: Iterable[tuple] = ()):
        self.n = n
        norm = []
        for e in edges:
            if len(e) == 2:
                u, v = e
                w = 1
            else:
                u, v, w = e
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge endpoint out of range: {(u, v)}")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if w < 0:
                raise GraphError(f"negative weight on edge {(u, v)}")
            norm.append((u, v, w))
        self.edges = tuple(norm)
        adj = [[] for _ in range(n)]
        for eid, (u, v, _) in enumerate(self.edges):
            adj[u].append((eid, v))
            adj[v].append((eid, u))
        self._adj = [tuple(a) for a in adj]

    @property
    def m(self) -> int:
        return len(self.edges)

    def endpoints(self, eid: int) -> tuple[int, int]:
        u, v, _ = self.edges[eid]
        return u, v

    def weight(self, eid: int) -> int:
        return self.edges[eid][2]

    def incident(self, v: int) -> tuple:
        """(edge id, other endpoint) pairs at v, in edge-id order."""
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def other_end(self, eid: int, v: int) -> int:
        u, w, _ = self.edges[eid]
        if v == u:
            return w
        if v == w:
            return u
        raise GraphError(f"vertex {v} not an endpoint of edge {eid}")

    def edge_ids_between(self, u: int, v: int) -> list[int]:
        return [eid for eid, w in self._adj[u] if w == v]

    def has_edge(self, u: int, v: int) -> bool:
        return any(w == v for _, w in self._adj[u])

    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = _component_of(self, 0)
        return len(seen) == self.n

    def __repr__(self):
        return f"MultiGraph(n={self.n}, m={self.m})"


def _component_of(g: MultiGraph, start: int, banned_edge: Optional[int] = None) -> set:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for eid, w in g.incident(v):
            if eid == banned_edge or w in seen:
                continue
            seen.add(w)
            stack.append(w)
    return seen


def connected_components(g: MultiGraph) -> list[set]:
    comps = []
    seen: set[int] = set()
    for v in range(g.n):
        if v in seen:
            continue
        comp = _component_of(g, v)
        seen |= comp
        comps.append(comp)
    return comps


def find_cut_vertex(g: MultiGraph) -> Optional[int]:
    """Return some cut vertex, or None if g is 2-vertex-connected.

    Graphs with fewer than 3 vertices are treated as 2-vertex-connected
    when connected.
    """
    if not g.is_connected():
        raise GraphError("graph is disconnected")
    if g.n < 3:
        return None
    low = [0] * g.n
    depth = [-1] * g.n
    parent_edge = [-1] * g.n
    order = []
    stack = [(0, -1, 0)]
    while stack:
        v, pe, d = stack.pop()
        if depth[v] != -1:
            continue
        depth[v] = d
        low[v] = d
        parent_edge[v] = pe
        order.append(v)
        for eid, w in g.incident(v):
            if depth[w] == -1:
                stack.append((w, eid, d + 1))
    children = {v: [] for v in range(g.n)}
    for v in order:
        if parent_edge[v] != -1:
            p = g.other_end(parent_edge[v], v)
            children[p].append(v)
    for v in reversed(order):
        for eid, w in g.incident(v):
            if eid == parent_edge[v]:
                continue
            if parent_edge[w] == eid:
                low[v] = min(low[v], low[w])
            else:
                low[v] = min(low[v], depth[w])
    root = order[0]
    if len(children[root]) > 1:
        return root
    for v in order[1:]:
        for c in children[v]:
            if low[c] >= depth[v]:
                return v
    return None


def is_two_vertex_connected(g: MultiGraph) -> bool:
    return g.is_connected() and find_cut_vertex(g) is None


def find_bridge(g: MultiGraph) -> Optional[int]:
    """Return the id of some bridge edge, or None if 2-edge-connected."""
    for eid in range(g.m):
        u, v, _ = g.edges[eid]
        if g.edge_ids_between(u, v) != [eid]:
            continue
        if v not in _component_of(g, u, banned_edge=eid):
            return eid
    return None


class EdgeMultiset:
    """Map edge id -> multiplicity in {1, 2}.

    Represents joins and tours as sub-multisets of the doubled edge set.
    """

    __slots__ = ("mult",)

    def __init__(self, mult: Optional[dict] = None):
        self.mult = dict(mult) if mult else {}
        for eid, k in self.mult.items():
            if k not in (1, 2):
                raise GraphError(f"multiplicity {k} on edge {eid} not in {{1,2}}")

    @classmethod
    def from_edges(cls, eids: Iterable[int]) -> "EdgeMultiset":
        ms = cls()
        for eid in eids:
            ms.add(eid)
        return ms

    def add(self, eid: int, k: int = 1) -> None:
        new = self.mult.get(eid, 0) + k
        if new > 2:
            raise GraphError(f"edge {eid} would exceed multiplicity 2")
        self.mult[eid] = new

    def size(self) -> int:
        return sum(self.mult.values())

    def weight(self, g: MultiGraph) -> int:
        return sum(k * g.weight(eid) for eid, k in self.mult.items())

    def support(self) -> set:
        return set(self.mult)

    def union(self, other: "EdgeMultiset") -> "EdgeMultiset":
        out = EdgeMultiset(self.mult)
        for eid, k in other.mult.items():
            out.add(eid, k)
        return out

    def odd_vertices(self, g: MultiGraph) -> set:
        deg = {}
        for eid, k in self.mult.items():
            u, v, _ = g.edges[eid]
            deg[u] = deg.get(u, 0) + k
            deg[v] = deg.get(v, 0) + k
        return {v for v, d in deg.items() if d % 2 == 1}

    def copy(self) -> "EdgeMultiset":
        return EdgeMultiset(self.mult)

    def __eq__(self, other):
        return isinstance(other, EdgeMultiset) and self.mult == other.mult

    def __repr__(self):
        return f"EdgeMultiset({self.mult})"


@dataclass(frozen=True)
class ProblemInstance:
    """A graph with the two tour endpoints (s == t encodes a closed tour)."""

    graph: MultiGraph
    s: int
    t: int

    def __post_init__(self):
        if not (0 <= self.s < self.graph.n and 0 <= self.t < self.graph.n):
            raise GraphError("terminal out of range")

    @property
    def terminals(self) -> frozenset:
        return frozenset() if self.s == self.t else frozenset((self.s, self.t))


def shortest_distances(g: MultiGraph, source: int) -> dict:
    """Exact single-source distances; raises if some vertex is unreachable."""
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, d):
            continue
        for eid, w in g.incident(v):
            nd = d + g.weight(eid)
            if nd < dist.get(w, nd + 1):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    if len(dist) < g.n:
        missing = min(v for v in range(g.n) if v not in dist)
        raise UnreachableVertexError(missing)
    return dist


def shortest_path_edges(g: MultiGraph, source: int, target: int,
                        weights: Optional[Sequence[int]] = None) -> list[int]:
    """Edge ids of a shortest source-target path, deterministic tie-break."""
    wfun = (lambda eid: g.weight(eid)) if weights is None else (lambda eid: weights[eid])
    dist = {source: 0}
    prev = {}
    heap = [(0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, d):
            continue
        for eid, w in g.incident(v):
            nd = d + wfun(eid)
            if w not in dist or nd < dist[w]:
                dist[w] = nd
                prev[w] = (v, eid)
                heapq.heappush(heap, (nd, w))
    if target not in dist:
        raise UnreachableVertexError(target)
    path = []
    v = target
    while v != source:
        p, eid = prev[v]
        path.append(eid)
        v = p
    path.reverse()
    return path


def min_t_join(g: MultiGraph, T: Iterable[int]) -> EdgeMultiset:
    """Minimum-weight T-join via metric closure plus perfect matching.

    Returns a simple edge set (multiplicities 1); with nonnegative weights
    doubled edges are never needed.
    """
    T = sorted(set(T))
    if len(T) % 2 != 0:
        raise ParityError(f"|T| = {len(T)} is odd")
    if not T:
        return EdgeMultiset()
    dists = {}
    paths = {}
    for a in T:
        d = shortest_distances(g, a)
        dists[a] = d
        paths[a] = {b: shortest_path_edges(g, a, b) for b in T if b != a}
    weights = {frozenset((a, b)): dists[a][b] for i, a in enumerate(T) for b in T[i + 1:]}
    pairs = min_weight_perfect_matching(T, weights)
    if pairs is None:
        raise InfeasibleJoinError("no pairing of the target vertices exists")
    used: set[int] = set()
    for a, b in pairs:
        used ^= set(paths[a][b] if b in paths[a] else paths[b][a])
    join = EdgeMultiset.from_edges(used)
    assert join.odd_vertices(g) == set(T)
    return join


def constrained_simple_t_join(
    g: MultiGraph,
    T: Iterable[int],
    forced_deg1: Iterable[int],
    weights: Optional[Sequence[int]] = None,
) -> set:
    """Minimum-weight simple T-join using exactly one edge at each forced vertex.

    Weights may be negative (``weights`` overrides the graph's own).  Exact
    branch and bound over the incident-edge choices at the forced vertices;
    each leaf reduces to an unconstrained join on the remaining graph via
    the negative-edge flip.
    """
    T = set(T)
    if len(T) % 2 != 0:
        raise ParityError(f"|T| = {len(T)} is odd")
    forced = sorted(set(forced_deg1))
    w = list(weights) if weights is not None else [g.weight(e) for e in range(g.m)]
    for v in forced:
        if g.degree(v) != 3:
            raise GraphError(f"forced vertex {v} has degree {g.degree(v)}, need 3")
        if v not in T:
            raise GraphError(f"forced vertex {v} must be an odd-degree target")

    forced_set = set(forced)
    free_eids = [e for e in range(g.m)
                 if not (g.edges[e][0] in forced_set or g.edges[e][1] in forced_set)]
    neg_free = [e for e in free_eids if w[e] < 0]
    base_cost = sum(w[e] for e in neg_free)
    neg_toggle: set[int] = set()
    for e in neg_free:
        u, v, _ = g.edges[e]
        neg_toggle ^= {u, v}

    # Metric closure of the forced-free subgraph under |w|.
    sub_vertices = [v for v in range(g.n) if v not in forced_set]
    sub_index = {v: i for i, v in enumerate(sub_vertices)}
    sub_edges = [(sub_index[g.edges[e][0]], sub_index[g.edges[e][1]], abs(w[e]))
                 for e in free_eids]
    sub = MultiGraph(len(sub_vertices), sub_edges)
    sub_eid_to_orig = {i: e for i, e in enumerate(free_eids)}
    closure: dict[int, dict] = {}
    closure_paths: dict[int, dict] = {}

    def _closure_from(v: int):
        if v in closure:
            return
        sv = sub_index[v]
        dist = {sv: 0}
        prev = {}
        heap = [(0, sv)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > dist.get(x, d):
                continue
            for eid, y in sub.incident(x):
                nd = d + sub.weight(eid)
                if y not in dist or nd < dist[y]:
                    dist[y] = nd
                    prev[y] = (x, eid)
                    heapq.heappush(heap, (nd, y))
        closure[v] = {sub_vertices[x]: d for x, d in dist.items()}
        closure_paths[v] = (prev, dist)

    def _path_between(a: int, b: int) -> set:
        prev, _ = closure_paths[a]
        x = sub_index[b]
        out = set()
        while x != sub_index[a]:
            p, eid = prev[x]
            out.add(sub_eid_to_orig[eid])
            x = p
        return out

    best = {"cost": None, "edges": None}
    leaf_cache: dict[frozenset, Optional[tuple]] = {}

    def _solve_leaf(target: frozenset) -> Optional[tuple]:
        if target in leaf_cache:
            return leaf_cache[target]
        nodes = sorted(target)
        result = None
        if len(nodes) % 2 == 0:
            for v in nodes:
                _closure_from(v)
            pair_w = {}
            for i, a in enumerate(nodes):
                for b in nodes[i + 1:]:
                    if b in closure[a]:
                        pair_w[frozenset((a, b))] = closure[a][b]
            pairs = min_weight_perfect_matching(nodes, pair_w)
            if pairs is not None:
                chosen: set[int] = set()
                for a, b in pairs:
                    chosen ^= _path_between(a, b)
                join = set(neg_free) ^ chosen
                result = (base_cost + sum(abs(w[e]) for e in chosen), join)
        leaf_cache[target] = result
        return result

    min_forced = [min(w[eid] for eid, _ in g.incident(v)) for v in forced]

    def _branch(idx: int, fixed_cost: int, fixed_edges: list, toggles: set):
        if best["cost"] is not None:
            lb = fixed_cost + sum(min_forced[idx:]) + base_cost
            if lb >= best["cost"]:
                return
        if idx == len(forced):
            target = (T - forced_set) ^ toggles ^ neg_toggle
            if not target <= set(sub_vertices):
                return
            leaf = _solve_leaf(frozenset(target))
            if leaf is None:
                return
            join_cost, join = leaf
            total = fixed_cost + join_cost
            if best["cost"] is None or total < best["cost"]:
                best["cost"] = total
                best["edges"] = set(fixed_edges) | join
            return
        v = forced[idx]
        options = sorted(g.incident(v), key=lambda p: (w[p[0]], p[0]))
        for eid, other in options:
            fixed_edges.append(eid)
            _branch(idx + 1, fixed_cost + w[eid], fixed_edges, toggles ^ {other})
            fixed_edges.pop()

    _branch(0, 0, [], set())
    if best["edges"] is None:
        raise InfeasibleJoinError("no simple join meets the forced-degree constraints")
    join = best["edges"]
    ms = EdgeMultiset.from_edges(join)
    assert ms.odd_vertices(g) == T
    for v in forced:
        assert sum(1 for eid, _ in g.incident(v) if eid in join) == 1
    return join


def is_t_tour(g: MultiGraph, J: EdgeMultiset, T: Iterable[int]) -> tuple[bool, str]:
    """Check that J is a T-join spanning and connecting all of g."""
    T = set(T)
    odd = J.odd_vertices(g)
    if odd != T:
        return False, f"odd-degree set {sorted(odd)} differs from target {sorted(T)}"
    support = J.support()
    touched: set[int] = set()
    for eid in support:
        u, v, _ = g.edges[eid]
        touched.add(u)
        touched.add(v)
    if g.n == 1:
        return True, "ok"
    if g.n == 0:
        return True, "ok"
    missing = [v for v in range(g.n) if v not in touched]
    if missing:
        return False, f"vertex uncovered: {missing[0]}"
    adj = {v: [] for v in touched}
    for eid in support:
        u, v, _ = g.edges[eid]
        adj[u].append(v)
        adj[v].append(u)
    start = next(iter(touched))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    if len(seen) != len(touched):
        off = min(touched - seen)
        return False, f"support is disconnected (vertex {off} cut off)"
    return True, "ok"


@dataclass(frozen=True)
class Contraction:
    """Result of contracting a vertex set: quotient graph plus id maps."""

    graph: MultiGraph
    terminals: frozenset
    vertex_map: tuple          # old vertex -> new vertex
    edge_map: tuple            # new edge id -> old edge id
    merged_vertex: int         # image of the contracted set


def contract(g: MultiGraph, W: Iterable[int], T: Iterable[int]) -> Contraction:
    """Contract W to one vertex; drop self-loops, keep parallel edges.

    The contracted vertex joins the terminal set iff |T ∩ W| is odd.
    """
    W = set(W)
    T = set(T)
    if not W:
        raise GraphError("cannot contract an empty set")
    keep = [v for v in range(g.n) if v not in W]
    vmap = [0] * g.n
    for i, v in enumerate(keep):
        vmap[v] = i
    merged = len(keep)
    for v in W:
        vmap[v] = merged
    new_edges = []
    edge_map = []
    for eid, (u, v, w) in enumerate(g.edges):
        nu, nv = vmap[u], vmap[v]
        if nu == nv:
            continue
        new_edges.append((nu, nv, w))
        edge_map.append(eid)
    newT = {vmap[v] for v in T if v not in W}
    if len(T & W) % 2 == 1:
        newT.add(merged)
    return Contraction(
        graph=MultiGraph(merged + 1, new_edges),
        terminals=frozenset(newT),
        vertex_map=tuple(vmap),
        edge_map=tuple(edge_map),
        merged_vertex=merged,
    )


@dataclass(frozen=True)
class Block:
    vertices: frozenset
    edge_ids: frozenset
    s_local: int
    t_local: int


@dataclass(frozen=True)
class BlockTree:
    blocks: tuple
    cut_vertices: frozenset


def block_decompose(inst: ProblemInstance) -> BlockTree:
    """Split into 2-vertex-connected blocks with per-block terminals.

    Blocks on the s-t path through the block-cut tree receive the two
    terminals nearest them; every other block gets the cut vertex through
    which it hangs off that path (a closed-tour sub-instance).
    """
    g = inst.graph
    if not g.is_connected():
        raise GraphError("graph is disconnected")
    if g.n == 1:
        return BlockTree(blocks=(Block(frozenset((0,)), frozenset(), inst.s, inst.t),),
                         cut_vertices=frozenset())

    # Hopcroft-Tarjan biconnected components over edge ids.
    depth = [-1] * g.n
    low = [0] * g.n
    comps: list[set] = []
    estack: list[int] = []
    cuts: set[int] = set()
    parent_edge = [-1] * g.n

    root = 0
    stack: list[tuple] = [(root, -1, iter(g.incident(root)))]
    depth[root] = 0
    root_children = 0
    while stack:
        v, pe, it = stack[-1]
        advanced = False
        for eid, w in it:
            if eid == pe:
                continue
            if depth[w] == -1:
                estack.append(eid)
                depth[w] = depth[v] + 1
                low[w] = depth[w]
                parent_edge[w] = eid
                stack.append((w, eid, iter(g.incident(w))))
                if v == root:
                    root_children += 1
                advanced = True
                break
            elif depth[w] < depth[v]:
                estack.append(eid)
                low[v] = min(low[v], depth[w])
        if advanced:
            continue
        stack.pop()
        if stack:
            u = stack[-1][0]
            low[u] = min(low[u], low[v])
            if low[v] >= depth[u]:
                comp = set()
                while True:
                    eid = estack.pop()
                    comp.add(eid)
                    if eid == pe:
                        break
                comps.append(comp)
                if u != root or root_children > 1:
                    cuts.add(u)
    if root_children > 1:
        cuts.add(root)

    block_vertices = []
    for comp in comps:
        vs = set()
        for eid in comp:
            u, v, _ = g.edges[eid]
            vs.add(u)
            vs.add(v)
        block_vertices.append(vs)

    # Block-cut tree walk: find the chain of blocks between s and t.
    node_blocks = {v: [] for v in range(g.n)}
    for bi, vs in enumerate(block_vertices):
        for v in vs:
            node_blocks[v].append(bi)

    def _bfs_block_path(sv: int, tv: int) -> list[int]:
        # Alternating bfs over (vertex, block) incidence.
        from collections import deque
        prev: dict = {("v", sv): None}
        q = deque([("v", sv)])
        goal = None
        while q:
            kind, x = q.popleft()
            if kind == "v":
                for bi in node_blocks[x]:
                    if ("b", bi) not in prev:
                        prev[("b", bi)] = ("v", x)
                        q.append(("b", bi))
            else:
                if tv in block_vertices[x]:
                    goal = ("b", x)
                    break
                for v in sorted(block_vertices[x]):
                    if ("v", v) not in prev:
                        prev[("v", v)] = ("b", x)
                        q.append(("v", v))
        assert goal is not None
        chain = []
        cur = goal
        while cur is not None:
            if cur[0] == "b":
                chain.append(cur[1])
            cur = prev[cur]
        chain.reverse()
        return chain

    path_blocks = _bfs_block_path(inst.s, inst.t)
    on_path = set(path_blocks)

    # Terminals for path blocks: entry/exit vertices along the chain.
    entry = {}
    exitv = {}
    cur = inst.s
    for i, bi in enumerate(path_blocks):
        entry[bi] = cur
        if i + 1 < len(path_blocks):
            nxt = block_vertices[bi] & block_vertices[path_blocks[i + 1]]
            assert len(nxt) == 1
            cur = next(iter(nxt))
            exitv[bi] = cur
        else:
            exitv[bi] = inst.t

    # Off-path blocks hang through a unique cut vertex toward the path;
    # discover them by BFS outward from the path blocks.
    from collections import deque
    hook: dict[int, int] = {}
    seen_v: set[int] = set()
    seen_b = set(on_path)
    q = deque()
    for bi in path_blocks:
        for v in sorted(block_vertices[bi]):
            if v not in seen_v:
                seen_v.add(v)
                q.append(v)
    while q:
        v = q.popleft()
        for bi in node_blocks[v]:
            if bi in seen_b:
                continue
            seen_b.add(bi)
            hook[bi] = v
            for u in sorted(block_vertices[bi]):
                if u not in seen_v:
                    seen_v.add(u)
                    q.append(u)

    blocks = []
    for bi, vs in enumerate(block_vertices):
        if bi in on_path:
            blocks.append(Block(frozenset(vs), frozenset(comps[bi]), entry[bi], exitv[bi]))
        else:
            blocks.append(Block(frozenset(vs), frozenset(comps[bi]), hook[bi], hook[bi]))
    return BlockTree(blocks=tuple(blocks), cut_vertices=frozenset(cuts))


def induced_instance(g: MultiGraph, block: Block) -> tuple[ProblemInstance, dict]:
    """Sub-instance for one block; returns (instance, local->global edge map)."""
    vs = sorted(block.vertices)
    index = {v: i for i, v in enumerate(vs)}
    eids = sorted(block.edge_ids)
    edges = [(index[g.edges[e][0]], index[g.edges[e][1]], g.edges[e][2]) for e in eids]
    sub = MultiGraph(len(vs), edges)
    inst = ProblemInstance(sub, index[block.s_local], index[block.t_local])
    return inst, {i: e for i, e in enumerate(eids)}


DEFAULT_ORACLE_LIMIT = 14


def brute_force_opt(inst: ProblemInstance, limit: int = DEFAULT_ORACLE_LIMIT
                    ) -> tuple[int, EdgeMultiset]:
    """Exact optimum tour between the instance terminals.

    Shortest covering walk by Dijkstra over (visited set, current vertex)
    states; the walk's edge multiset is the optimum tour.  Ties are broken
    deterministically (lowest edge id first during relaxation).
    """
    g = inst.graph
    if g.n > limit:
        raise OracleLimitError(f"n = {g.n} exceeds oracle limit {limit}")
    if not g.is_connected():
        raise UnreachableVertexError(min(v for v in range(g.n)
                                         if v not in _component_of(g, inst.s)))
    if g.n == 1:
        return 0, EdgeMultiset()
    full = (1 << g.n) - 1
    start = (1 << inst.s, inst.s)
    dist = {start: 0}
    prev: dict = {start: None}
    heap = [(0, start)]
    target_mask = full
    while heap:
        d, state = heapq.heappop(heap)
        if d > dist.get(state, d):
            continue
        mask, v = state
        if mask == target_mask and v == inst.t:
            break
        for eid, w in g.incident(v):
            ns = (mask | (1 << w), w)
            nd = d + g.weight(eid)
            if ns not in dist or nd < dist[ns]:
                dist[ns] = nd
                prev[ns] = (state, eid)
                heapq.heappush(heap, (nd, ns))
    goal = (target_mask, inst.t)
    if goal not in dist:
        raise UnreachableVertexError(inst.t)
    ms = EdgeMultiset()
    cur = goal
    while prev[cur] is not None:
        cur, eid = prev[cur]
        ms.add(eid)
    ok, why = is_t_tour(g, ms, inst.terminals)
    assert ok, why
    return dist[goal], ms


# ---------------------------------------------------------------------------
# Instance files: `p stt <n> <m>` / `s <id>` / `t <id>` / `e <u> <v> [w]`.

def parse_instance(text: str) -> ProblemInstance:
    n = m = None
    s = t = None
    edges = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        try:
            if parts[0] == "p":
                if len(parts) != 4 or parts[1] != "stt":
                    raise ValueError("expected 'p stt <n> <m>'")
                n, m = int(parts[2]), int(parts[3])
            elif parts[0] == "s":
                s = int(parts[1])
            elif parts[0] == "t":
                t = int(parts[1])
            elif parts[0] == "e":
                if n is None:
                    raise ValueError("edge before problem line")
                u, v = int(parts[1]), int(parts[2])
                w = int(parts[3]) if len(parts) > 3 else 1
                edges.append((u, v, w))
            else:
                raise ValueError(f"unknown record '{parts[0]}'")
        except (ValueError, IndexError) as exc:
            raise ParseError(line_no, str(exc)) from exc
    if n is None:
        raise ParseError(0, "missing problem line")
    if s is None or t is None:
        raise ParseError(0, "missing terminal line")
    if m is not None and m != len(edges):
        raise ParseError(0, f"declared {m} edges, found {len(edges)}")
    try:
        g = MultiGraph(n, edges)
        return ProblemInstance(g, s, t)
    except GraphError as exc:
        raise ParseError(0, str(exc)) from exc


def format_instance(inst: ProblemInstance) -> str:
    g = inst.graph
    lines = [f"p stt {g.n} {g.m}", f"s {inst.s}", f"t {inst.t}"]
    for u, v, w in g.edges:
        lines.append(f"e {u} {v}" if w == 1 else f"e {u} {v} {w}")
    return "\n".join(lines) + "\n"


def parse_tour(text: str) -> EdgeMultiset:
    """Tour files: one `use <edge-id> <multiplicity>` line per edge."""
    ms = EdgeMultiset()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] != "use" or len(parts) != 3:
            raise ParseError(line_no, "expected 'use <edge-id> <multiplicity>'")
        try:
            ms.add(int(parts[1]), int(parts[2]))
        except (ValueError, GraphError) as exc:
            raise ParseError(line_no, str(exc)) from exc
    return ms


def format_tour(ms: EdgeMultiset) -> str:
    return "".join(f"use {eid} {k}\n" for eid, k in sorted(ms.mult.items()))
