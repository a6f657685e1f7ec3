"""Matroid oracles, maximum-cardinality intersection, and union coloring.

Provides graphic and laminar matroids over arbitrary hashable, orderable
elements, exchange-graph matroid intersection, the two-coloring results
used to split helper edges between the red and blue halves of a circuit,
and the maximal minimizer of r1(Q) + r2(E \\ Q) needed for dual
certificates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional


class MatroidError(Exception):
    pass


class MatroidOracle:
    """Independence oracle over a finite ground set.

    Subclasses implement ``independent``; rank queries run greedily over the
    element order, which is valid for any matroid.
    """

    def __init__(self, ground: Iterable):
        self.ground = frozenset(ground)
        self._order = sorted(self.ground)

    def independent(self, subset: Iterable) -> bool:
        raise NotImplementedError

    def rank(self, subset: Iterable) -> int:
        subset = set(subset)
        picked = []
        for e in self._order:
            if e in subset:
                picked.append(e)
                if not self.independent(picked):
                    picked.pop()
        return len(picked)

    def max_independent_subset(self, ordered: Iterable) -> set:
        """Greedy maximal independent subset scanning in the given order."""
        picked = []
        for e in ordered:
            picked.append(e)
            if not self.independent(picked):
                picked.pop()
        return set(picked)

    def contract(self, fixed: Iterable) -> "ContractedMatroid":
        return ContractedMatroid(self, fixed)


class ContractedMatroid(MatroidOracle):
    """M / F: independence of Z tested as Z together with F."""

    def __init__(self, base: MatroidOracle, fixed: Iterable):
        self.base = base
        self.fixed = frozenset(fixed)
        if not base.independent(self.fixed):
            raise MatroidError("can only contract an independent set")
        super().__init__(base.ground - self.fixed)

    def independent(self, subset):
        return self.base.independent(set(subset) | self.fixed)


class FreeMatroid(MatroidOracle):
    def independent(self, subset):
        return set(subset) <= self.ground


class PartitionMatroid(MatroidOracle):
    """Disjoint element classes with per-class capacities."""

    def __init__(self, classes: Iterable[tuple]):
        self.classes = [(frozenset(c), cap) for c, cap in classes]
        seen: set = set()
        for c, _ in self.classes:
            if c & seen:
                raise MatroidError("partition classes overlap")
            seen |= c
        super().__init__(seen)

    def independent(self, subset):
        subset = set(subset)
        if not subset <= self.ground:
            return False
        return all(len(subset & c) <= cap for c, cap in self.classes)


class GraphicMatroid(MatroidOracle):
    """Cycle matroid: a set is independent iff its edges form a forest.

    Elements map to endpoint pairs over integer vertices; parallel elements
    (same endpoints) are dependent together, as in a multigraph.
    """

    def __init__(self, n_vertices: int, endpoints: Mapping[Hashable, tuple]):
        self.n_vertices = n_vertices
        self.endpoints = dict(endpoints)
        super().__init__(self.endpoints)

    def independent(self, subset):
        parent = list(range(self.n_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in subset:
            u, v = self.endpoints[e]
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True


class LaminarMatroid(MatroidOracle):
    """Capacities on a laminar family of element groups."""

    def __init__(self, ground: Iterable, caps: Iterable[tuple]):
        super().__init__(ground)
        self.caps = [(frozenset(c), cap) for c, cap in caps]
        for c, cap in self.caps:
            if cap < 0:
                raise MatroidError("negative capacity")
            if not c <= self.ground:
                raise MatroidError("capacity group outside ground set")
        for a, _ in self.caps:
            for b, _ in self.caps:
                if a & b and not (a <= b or b <= a):
                    raise MatroidError("capacity groups are not laminar")

    def independent(self, subset):
        subset = set(subset)
        if not subset <= self.ground:
            return False
        return all(len(subset & c) <= cap for c, cap in self.caps)


def matroid_intersect_max(m1: MatroidOracle, m2: MatroidOracle) -> set:
    """Maximum-cardinality common independent set via augmenting paths.

    Deterministic given the element order: breadth-first search over the
    exchange digraph from the sources in sorted order.
    """
    if m1.ground != m2.ground:
        raise MatroidError("oracles disagree on the ground set")
    ground = sorted(m1.ground)
    current: set = set()
    while True:
        path = _augmenting_path(m1, m2, ground, current)
        if path is None:
            return current
        current ^= set(path)


def _augmenting_path(m1, m2, ground, I):
    outside = [e for e in ground if e not in I]
    inside = [e for e in ground if e in I]
    sources = [y for y in outside if m1.independent(I | {y})]
    sinks = {y for y in outside if m2.independent(I | {y})}
    if not sources:
        return None
    prev: dict = {}
    queue = deque()
    for y in sources:
        prev[y] = None
        if y in sinks:
            return [y]
        queue.append(y)
    while queue:
        x = queue.popleft()
        if x in I:
            # arcs x -> y for y outside with I - x + y independent in m1
            base = I - {x}
            for y in outside:
                if y in prev:
                    continue
                if m1.independent(base | {y}):
                    prev[y] = x
                    if y in sinks:
                        return _unwind(prev, y)
                    queue.append(y)
        else:
            # arcs y -> x for x inside with I - x + y independent in m2
            for z in inside:
                if z in prev:
                    continue
                if m2.independent((I - {z}) | {x}):
                    prev[z] = x
                    queue.append(z)
    return None


def _unwind(prev, end):
    path = [end]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path


def _exchange_reachable(m1, m2, ground, I) -> set:
    """Elements reachable from the m1-extendable sources at optimality."""
    outside = [e for e in ground if e not in I]
    inside = [e for e in ground if e in I]
    reach = {y for y in outside if m1.independent(I | {y})}
    queue = deque(sorted(reach))
    while queue:
        x = queue.popleft()
        if x in I:
            base = I - {x}
            for y in outside:
                if y not in reach and m1.independent(base | {y}):
                    reach.add(y)
                    queue.append(y)
        else:
            for z in inside:
                if z not in reach and m2.independent((I - {z}) | {x}):
                    reach.add(z)
                    queue.append(z)
    return reach


def max_min_rank_cover(m1: MatroidOracle, m2: MatroidOracle, I: set) -> set:
    """Maximal Q minimizing r1(Q) + r2(E \\ Q), given a maximum common
    independent set I.

    The minimizers form a lattice, so a single greedy growth pass from any
    minimizer reaches the unique maximal one.
    """
    ground = sorted(m1.ground)
    reach = _exchange_reachable(m1, m2, ground, I)
    q = set(ground) - reach
    target = len(I)

    def value(subset):
        return m1.rank(subset) + m2.rank(set(ground) - subset)

    if value(q) != target:
        raise MatroidError("exchange-graph cover does not certify optimality")
    for e in ground:
        if e not in q and value(q | {e}) == target:
            q.add(e)
    return q


def union_color(m: MatroidOracle, R: Iterable, B: Iterable, U: Iterable
                ) -> tuple[set, set]:
    """Split U into (X, Y) with r(R+X) + r(B+Y) >= r(R+B) + r(U).

    Runs matroid union on the contractions by maximal independent subsets
    of R+B and realizes the union as an intersection on a doubled ground
    set.
    """
    R, B, U = set(R), set(B), set(U)
    if (R | B | U) != m.ground or (R & B) or (R & U) or (B & U):
        raise MatroidError("R, B, U must partition the ground set")
    rb = m.max_independent_subset(sorted(R) + sorted(B))
    r_part, b_part = rb & R, rb & B
    u_ind = m.max_independent_subset(sorted(U))

    if u_ind:
        m_r = m.contract(r_part)
        m_b = m.contract(b_part)
        doubled = [(e, side) for e in sorted(u_ind) for side in (1, 2)]

        class _SideSum(MatroidOracle):
            def independent(self, subset):
                ones = {e for e, s in subset if s == 1}
                twos = {e for e, s in subset if s == 2}
                return m_r.independent(ones) and m_b.independent(twos)

        side_sum = _SideSum(doubled)
        one_copy = PartitionMatroid(
            [(frozenset(((e, 1), (e, 2))), 1) for e in u_ind])
        common = matroid_intersect_max(side_sum, one_copy)
        if len(common) != len(u_ind):
            raise MatroidError("union rank fell short of |U'| (not a matroid?)")
        x = {e for e, s in common if s == 1}
        y = {e for e, s in common if s == 2}
    else:
        x, y = set(), set()

    x |= U - u_ind
    if m.rank(R | x) + m.rank(B | y) < m.rank(R | B) + m.rank(U):
        raise MatroidError("coloring inequality failed")
    return x, y


def forest_color(n_vertices: int,
                 R: Mapping[Hashable, tuple],
                 B: Mapping[Hashable, tuple],
                 U: Mapping[Hashable, tuple]) -> tuple[set, set, set]:
    """Color forest edges U red/blue so each color class stays a forest.

    R + B must form a circuit and (V, U) a forest; at most one U edge stays
    uncolored.  Edges are given as id -> (u, v).
    """
    ids = set(R) | set(B) | set(U)
    if len(ids) != len(R) + len(B) + len(U):
        raise MatroidError("edge ids must be distinct across R, B, U")
    if not (R and B and U):
        raise MatroidError("R, B, U must be nonempty")
    deg: dict[int, int] = {}
    for u, v in list(R.values()) + list(B.values()):
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    if any(d != 2 for d in deg.values()):
        raise MatroidError("(V, R+B) is not a circuit")
    m = GraphicMatroid(n_vertices, {**R, **B, **U})
    if m.rank(set(R) | set(B)) != len(R) + len(B) - 1:
        raise MatroidError("(V, R+B) is not a single circuit")
    if not m.independent(set(U)):
        raise MatroidError("(V, U) is not a forest")
    x, y = union_color(m, set(R), set(B), set(U))

    def prune(base: set, side: set) -> tuple[set, Optional[Hashable]]:
        if m.independent(base | side):
            return side, None
        for z in sorted(side):
            if m.independent(base | (side - {z})):
                return side - {z}, z
        raise MatroidError("color class more than one edge beyond a forest")

    u_r, z1 = prune(set(R), x)
    u_b, z2 = prune(set(B), y)
    dropped = {z for z in (z1, z2) if z is not None}
    if len(dropped) > 1:
        raise MatroidError("more than one uncolorable edge")
    return u_r, u_b, dropped
