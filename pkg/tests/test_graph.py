"""Graph core: joins, tours, contraction, blocks, exact oracle."""

import itertools
import random

import pytest

from sttour.graph import (
    EdgeMultiset,
    GraphError,
    MultiGraph,
    OracleLimitError,
    ParityError,
    ParseError,
    ProblemInstance,
    UnreachableVertexError,
    block_decompose,
    brute_force_opt,
    constrained_simple_t_join,
    contract,
    find_bridge,
    find_cut_vertex,
    format_instance,
    format_tour,
    induced_instance,
    is_t_tour,
    is_two_vertex_connected,
    min_t_join,
    parse_instance,
    parse_tour,
    shortest_distances,
)


def circuit(n, weights=None):
    return MultiGraph(n, [(i, (i + 1) % n, 1 if weights is None else weights[i])
                          for i in range(n)])


def path_graph(n):
    return MultiGraph(n, [(i, i + 1) for i in range(n - 1)])


def random_connected(rng, n, extra=2):
    edges = []
    for v in range(1, n):
        edges.append((rng.randrange(v), v))
    pool = [(u, v) for u in range(n) for v in range(u + 1, n)
            if (u, v) not in {(min(a, b), max(a, b)) for a, b in edges}]
    rng.shuffle(pool)
    edges += pool[:extra]
    return MultiGraph(n, edges)


def brute_min_t_join_weight(g, T):
    """Reference oracle: cheapest edge subset with odd degree exactly on T."""
    best = None
    for mask in itertools.product((0, 1), repeat=g.m):
        deg = [0] * g.n
        w = 0
        for eid, used in enumerate(mask):
            if used:
                u, v, wt = g.edges[eid]
                deg[u] += 1
                deg[v] += 1
                w += wt
        if {v for v in range(g.n) if deg[v] % 2} == set(T):
            if best is None or w < best:
                best = w
    return best


def brute_opt_tour(inst):
    """Reference oracle: exhaustive search over sub-multisets of 2E."""
    g = inst.graph
    best = None
    for mult in itertools.product((0, 1, 2), repeat=g.m):
        ms = EdgeMultiset({e: k for e, k in enumerate(mult) if k})
        ok, _ = is_t_tour(g, ms, inst.terminals)
        if ok:
            w = ms.weight(g)
            if best is None or w < best:
                best = w
    return best


class TestMultiGraph:
    def test_rejects_self_loop(self):
        with pytest.raises(GraphError):
            MultiGraph(2, [(0, 0)])

    def test_parallel_edges_have_distinct_ids(self):
        g = MultiGraph(2, [(0, 1), (0, 1)])
        assert g.edge_ids_between(0, 1) == [0, 1]

    def test_connectivity_checks(self):
        assert circuit(4).is_connected()
        assert not MultiGraph(3, [(0, 1)]).is_connected()
        assert is_two_vertex_connected(circuit(5))
        assert find_cut_vertex(path_graph(3)) == 1
        assert find_bridge(path_graph(2)) == 0
        assert find_bridge(circuit(3)) is None
        assert find_bridge(MultiGraph(2, [(0, 1), (0, 1)])) is None


class TestShortestDistances:
    def test_unit_path(self):
        g = path_graph(3)
        assert shortest_distances(g, 0) == {0: 0, 1: 1, 2: 2}

    def test_source_distance_zero(self):
        assert shortest_distances(circuit(5), 3)[3] == 0

    def test_weighted_triangle(self):
        # Exhaustive path enumeration on the triangle gives 0/1/2.
        g = MultiGraph(3, [(0, 1, 5), (0, 2, 1), (2, 1, 1)])
        assert shortest_distances(g, 0) == {0: 0, 2: 1, 1: 2}

    def test_unreachable_named(self):
        g = MultiGraph(3, [(0, 1)])
        with pytest.raises(UnreachableVertexError) as err:
            shortest_distances(g, 0)
        assert err.value.vertex == 2


class TestMinTJoin:
    def test_empty(self):
        assert min_t_join(circuit(4), []).size() == 0

    def test_path_endpoints(self):
        g = path_graph(4)
        join = min_t_join(g, [0, 3])
        assert join.support() == {0, 1, 2}

    def test_four_circuit_opposite(self):
        g = circuit(4)  # vertices s,a,t,b
        join = min_t_join(g, [1, 3])
        assert join.weight(g) == 2 == brute_min_t_join_weight(g, [1, 3])

    def test_odd_parity_rejected(self):
        with pytest.raises(ParityError):
            min_t_join(circuit(4), [1])

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_bruteforce(self, seed):
        rng = random.Random(seed)
        n = rng.randrange(4, 9)
        g = random_connected(rng, n, extra=rng.randrange(4))
        verts = list(range(n))
        rng.shuffle(verts)
        T = verts[: 2 * rng.randrange(0, n // 2 + 1)]
        join = min_t_join(g, T)
        assert join.odd_vertices(g) == set(T)
        assert join.weight(g) == brute_min_t_join_weight(g, T)


class TestConstrainedJoin:
    def test_no_constraint_reduces_to_min_join(self):
        g = circuit(5)
        got = constrained_simple_t_join(g, [0, 2], [])
        ms = EdgeMultiset.from_edges(got)
        assert ms.weight(g) == min_t_join(g, [0, 2]).weight(g)

    def test_forced_vertex_picks_one_negative_edge(self):
        # Forced hub 0 with weights -1,-1,0; targets force using one edge.
        g = MultiGraph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3), (1, 3)])
        w = [-1, -1, 0, 1, 1, 1]
        join = constrained_simple_t_join(g, [0, 1], [0], weights=w)
        assert sum(1 for e in join if 0 in g.endpoints(e)) == 1
        assert EdgeMultiset.from_edges(join).odd_vertices(g) == {0, 1}
        # Enumerate all valid joins to confirm optimality.
        best = None
        for r in range(g.m + 1):
            for sub in itertools.combinations(range(g.m), r):
                ms = EdgeMultiset.from_edges(sub)
                if ms.odd_vertices(g) != {0, 1}:
                    continue
                if sum(1 for e in sub if 0 in g.endpoints(e)) != 1:
                    continue
                c = sum(w[e] for e in sub)
                if best is None or c < best:
                    best = c
        assert sum(w[e] for e in join) == best

    def test_constraint_changes_optimum(self):
        # Unconstrained join would take all three cheap edges at the hub.
        g = MultiGraph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)])
        w = [-5, -5, -5, 1, 1]
        unconstrained = min(
            sum(w[e] for e in sub)
            for r in range(g.m + 1)
            for sub in itertools.combinations(range(g.m), r)
            if EdgeMultiset.from_edges(sub).odd_vertices(g) == {0, 1}
        )
        join = constrained_simple_t_join(g, [0, 1], [0], weights=w)
        assert sum(w[e] for e in join) > unconstrained


class TestIsTTour:
    def test_euler_circuit(self):
        g = circuit(4)
        ok, _ = is_t_tour(g, EdgeMultiset.from_edges(range(4)), [])
        assert ok

    def test_minimum_size_tour_on_c4(self):
        # s=0, a=1, t=2, b=3: {sa, at} plus the doubled edge {sb} reaches
        # the tight bound (3/2)n - 2 = 4 for n = 4.
        g = circuit(4)
        ms = EdgeMultiset({0: 1, 1: 1, 3: 2})
        ok, _ = is_t_tour(g, ms, [0, 2])
        assert ok and ms.size() == 4

    def test_uncovered_vertex_diagnostic(self):
        g = circuit(4)
        ms = EdgeMultiset({0: 2})
        ok, why = is_t_tour(g, ms, [])
        assert not ok and "uncovered" in why


class TestContract:
    def test_single_vertex_identity(self):
        g = circuit(3)
        res = contract(g, [2], [0, 1])
        assert res.graph.n == 3 and res.graph.m == 3
        assert res.terminals == {res.vertex_map[0], res.vertex_map[1]}

    def test_triangle_two_vertices(self):
        g = circuit(3)
        res = contract(g, [0, 1], [0])
        assert res.graph.n == 2
        assert res.graph.m == 2           # parallel pair kept, loop dropped
        assert res.terminals == {res.merged_vertex}

    def test_full_contraction(self):
        g = circuit(4)
        res = contract(g, range(4), [0, 2])
        assert res.graph.n == 1 and res.graph.m == 0
        assert res.terminals == frozenset()

    def test_parity_preserved(self):
        rng = random.Random(7)
        for _ in range(30):
            n = rng.randrange(3, 8)
            g = random_connected(rng, n)
            T = [v for v in range(n) if rng.random() < 0.5]
            if len(T) % 2:
                T.pop()
            W = [v for v in range(n) if rng.random() < 0.4] or [0]
            res = contract(g, W, T)
            assert len(res.terminals) % 2 == 0


class TestBlocks:
    def test_single_block(self):
        inst = ProblemInstance(circuit(5), 0, 2)
        bt = block_decompose(inst)
        assert len(bt.blocks) == 1
        assert (bt.blocks[0].s_local, bt.blocks[0].t_local) == (0, 2)

    def test_two_triangles_share_vertex(self):
        # triangles 0-1-2 and 2-3-4 sharing 2; s=0, t=3
        g = MultiGraph(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])
        inst = ProblemInstance(g, 0, 3)
        bt = block_decompose(inst)
        terms = sorted((b.s_local, b.t_local) for b in bt.blocks)
        assert terms == [(0, 2), (2, 3)]
        total = 0
        for b in bt.blocks:
            sub, emap = induced_instance(g, b)
            length, _ = brute_force_opt(sub)
            total += length
        assert total == brute_opt_tour(inst)

    def test_pendant_block_gets_closed_tour(self):
        # path block 0-1 .. plus a pendant triangle hanging off vertex 1
        g = MultiGraph(5, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 1), (2, 0)])
        inst = ProblemInstance(g, 0, 2)
        bt = block_decompose(inst)
        pend = [b for b in bt.blocks if b.s_local == b.t_local]
        assert len(pend) == 1 and pend[0].s_local == 1
        total = 0
        for b in bt.blocks:
            sub, _ = induced_instance(g, b)
            total += brute_force_opt(sub)[0]
        assert total == brute_opt_tour(inst)

    @pytest.mark.parametrize("seed", range(12))
    def test_block_recombination(self, seed):
        rng = random.Random(seed + 100)
        n = rng.randrange(4, 9)
        g = random_connected(rng, n, extra=rng.randrange(3))
        s, t = rng.sample(range(n), 2)
        inst = ProblemInstance(g, s, t)
        total = 0
        for b in block_decompose(inst).blocks:
            sub, _ = induced_instance(g, b)
            total += brute_force_opt(sub)[0]
        assert total == brute_opt_tour(inst)


class TestBruteForce:
    def test_c4_meets_lower_bound(self):
        inst = ProblemInstance(circuit(4), 0, 2)
        length, ms = brute_force_opt(inst)
        assert length == 4  # (3/2) * 4 - 2

    def test_c5(self):
        inst = ProblemInstance(circuit(5), 0, 2)
        length, _ = brute_force_opt(inst)
        assert length == 5 == brute_opt_tour(inst)

    def test_path_graph(self):
        inst = ProblemInstance(path_graph(6), 0, 5)
        assert brute_force_opt(inst)[0] == 5

    def test_limit_refusal(self):
        inst = ProblemInstance(circuit(15), 0, 7)
        with pytest.raises(OracleLimitError):
            brute_force_opt(inst)

    def test_closed_tour(self):
        inst = ProblemInstance(circuit(5), 1, 1)
        length, ms = brute_force_opt(inst)
        assert length == 5
        assert is_t_tour(inst.graph, ms, [])[0]

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_multiset_enumeration(self, seed):
        rng = random.Random(seed + 40)
        n = rng.randrange(3, 7)
        g = random_connected(rng, n, extra=rng.randrange(3))
        s, t = rng.randrange(n), rng.randrange(n)
        inst = ProblemInstance(g, s, t)
        assert brute_force_opt(inst)[0] == brute_opt_tour(inst)


class TestIO:
    def test_roundtrip(self):
        g = MultiGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 1, 3)])
        inst = ProblemInstance(g, 0, 2)
        again = parse_instance(format_instance(inst))
        assert again.graph.edges == g.edges
        assert (again.s, again.t) == (0, 2)

    def test_parse_error_reports_line(self):
        with pytest.raises(ParseError) as err:
            parse_instance("p stt 3 1\ns 0\nt 1\ne 0 zzz\n")
        assert err.value.line_no == 4

    def test_tour_roundtrip(self):
        ms = EdgeMultiset({0: 1, 3: 2})
        assert parse_tour(format_tour(ms)) == ms
