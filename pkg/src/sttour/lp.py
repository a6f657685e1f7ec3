"""Exact rational cutting-plane solver for the path-tour linear program.

Minimizes total edge mass subject to x(cut) >= 2 for cuts separating
neither or both endpoints and >= 1 for cuts separating them.  Violated
cuts are found by exact max-flow; the restricted LPs are solved by a dense
two-phase simplex over Fractions (Bland's rule, no cycling).
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Optional

from .graph import GraphError, MultiGraph, OracleLimitError, ProblemInstance

DEFAULT_LP_LIMIT = 40


class LpError(GraphError):
    pass


def _simplex_min(costs, rows, rhs):
    """min c.x  s.t.  A x >= b, x >= 0; returns (value, x) with Fractions.

    Two-phase dense tableau with a maintained reduced-cost row and Bland's
    rule.  Assumes b >= 0 (true for cut constraints).
    """
    m = len(rows)
    nv = len(costs)
    zero = Fraction(0)
    # columns: x (nv) | surplus (m) | artificial (m) | rhs
    width = nv + 2 * m + 1
    tab = []
    for i, (row, b) in enumerate(zip(rows, rhs)):
        line = [zero] * width
        for j, a in row.items():
            line[j] = Fraction(a)
        line[nv + i] = Fraction(-1)
        line[nv + m + i] = Fraction(1)
        line[-1] = Fraction(b)
        tab.append(line)
    basis = [nv + m + i for i in range(m)]

    def pivot(r, c):
        piv = tab[r][c]
        if piv != 1:
            tab[r] = [v / piv for v in tab[r]]
        rowr = tab[r]
        for i in range(m + 1):
            if i != r and len(tab) > i and tab[i][c]:
                f = tab[i][c]
                tab[i] = [a - f * b for a, b in zip(tab[i], rowr)]
        basis[r] = c

    def install_objective(obj):
        red = [Fraction(v) for v in obj] + [zero]
        for i, bi in enumerate(basis):
            if red[bi]:
                f = red[bi]
                red = [a - f * b for a, b in zip(red, tab[i])]
        if len(tab) == m:
            tab.append(red)
        else:
            tab[m] = red

    def run(allowed):
        while True:
            red = tab[m]
            enter = None
            for j in range(allowed):
                if red[j] < 0:
                    enter = j
                    break
            if enter is None:
                return -tab[m][-1]
            leave = None
            best = None
            for i in range(m):
                if tab[i][enter] > 0:
                    ratio = tab[i][-1] / tab[i][enter]
                    if best is None or ratio < best or \
                            (ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave is None:
                raise LpError("unbounded linear program")
            pivot(leave, enter)

    install_objective([zero] * (nv + m) + [Fraction(1)] * m)
    infeas = run(nv + 2 * m)
    if infeas != 0:
        raise LpError("infeasible cut system")
    for i in range(m):
        if basis[i] >= nv + m:
            for j in range(nv + m):
                if tab[i][j] != 0:
                    pivot(i, j)
                    break
    install_objective([Fraction(c) for c in costs] + [zero] * (2 * m))
    value = run(nv + m)
    x = [zero] * nv
    for i, bi in enumerate(basis):
        if bi < nv:
            x[bi] = tab[i][-1]
    return value, x


def _max_flow(n, capacity, source, sink):
    """Edmonds-Karp with Fraction capacities; returns (value, source side)."""
    cap = {}
    for (u, v), c in capacity.items():
        cap[(u, v)] = cap.get((u, v), Fraction(0)) + c
        cap[(v, u)] = cap.get((v, u), Fraction(0)) + c
    adj = {}
    for (u, v) in cap:
        adj.setdefault(u, set()).add(v)
    flow = Fraction(0)
    while True:
        prev = {source: None}
        q = deque([source])
        while q and sink not in prev:
            u = q.popleft()
            for v in sorted(adj.get(u, ())):
                if v not in prev and cap.get((u, v), 0) > 0:
                    prev[v] = u
                    q.append(v)
        if sink not in prev:
            break
        path = []
        v = sink
        while prev[v] is not None:
            path.append((prev[v], v))
            v = prev[v]
        push = min(cap[(u, v)] for u, v in path)
        for u, v in path:
            cap[(u, v)] -= push
            cap[(v, u)] = cap.get((v, u), Fraction(0)) + push
        flow += push
    side = {source}
    q = deque([source])
    while q:
        u = q.popleft()
        for v in sorted(adj.get(u, ())):
            if v not in side and cap.get((u, v), 0) > 0:
                side.add(v)
                q.append(v)
    return flow, side


def lp_value(inst: ProblemInstance, limit: int = DEFAULT_LP_LIMIT,
             return_solution: bool = False):
    """Exact optimum of the cut relaxation via cutting planes.

    Starts from the singleton cuts and separates violated constraints with
    minimum-cut computations until none remain.
    """
    g = inst.graph
    if g.n > limit:
        raise OracleLimitError(f"n = {g.n} exceeds LP limit {limit}")
    if g.n <= 1:
        return (Fraction(0), []) if return_solution else Fraction(0)
    if not g.is_connected():
        raise LpError("graph is disconnected")
    s, t = inst.s, inst.t
    odd_pair = s != t

    cuts = []                   # (frozenset U, rhs)
    seen = set()

    def add_cut(u_set, rhs):
        key = frozenset(u_set)
        if key in seen or not key or len(key) >= g.n:
            return False
        seen.add(key)
        cuts.append((key, rhs))
        return True

    for v in range(g.n):
        add_cut({v}, 1 if (odd_pair and v in (s, t)) else 2)

    while True:
        rows = []
        rhs = []
        for u_set, b in cuts:
            row = {}
            for eid in range(g.m):
                a, bb = g.endpoints(eid)
                if (a in u_set) != (bb in u_set):
                    row[eid] = 1
            rows.append(row)
            rhs.append(b)
        value, x = _simplex_min([1] * g.m, rows, rhs)

        capacity = {}
        for eid in range(g.m):
            if x[eid] > 0:
                u, v = g.endpoints(eid)
                key = (min(u, v), max(u, v))
                capacity[key] = capacity.get(key, Fraction(0)) + x[eid]
        added = False
        if odd_pair:
            flow, side = _max_flow(g.n, capacity, s, t)
            if flow < 1:
                added |= add_cut(side, 1)
        # even cuts: merge s and t, separate each other vertex
        merged = {}
        for (u, v), c in capacity.items():
            mu = s if (odd_pair and u == t) else u
            mv = s if (odd_pair and v == t) else v
            if mu == mv:
                continue
            key = (min(mu, mv), max(mu, mv))
            merged[key] = merged.get(key, Fraction(0)) + c
        for v in range(g.n):
            if v == s or v == t:
                continue
            flow, side = _max_flow(g.n, merged, v, s)
            if flow < 2:
                added |= add_cut(set(side) - {s, t}, 2)
        if not added:
            if return_solution:
                return value, x
            return value
