"""Matroid oracles, intersection, union coloring, forest coloring."""

import itertools
import random

import pytest

from sttour.matroids import (
    FreeMatroid,
    GraphicMatroid,
    LaminarMatroid,
    MatroidError,
    MatroidOracle,
    PartitionMatroid,
    forest_color,
    matroid_intersect_max,
    max_min_rank_cover,
    union_color,
)


def random_graphic(rng, n_vertices, n_edges):
    ends = {}
    for e in range(n_edges):
        u = rng.randrange(n_vertices)
        v = rng.randrange(n_vertices)
        while v == u:
            v = rng.randrange(n_vertices)
        ends[e] = (u, v)
    return GraphicMatroid(n_vertices, ends)


def brute_max_common(m1, m2):
    ground = sorted(m1.ground)
    best = 0
    for r in range(len(ground), -1, -1):
        for sub in itertools.combinations(ground, r):
            if m1.independent(sub) and m2.independent(sub):
                return r
    return best


class TestOracles:
    def test_graphic_independence(self):
        m = GraphicMatroid(3, {0: (0, 1), 1: (1, 2), 2: (2, 0)})
        assert m.independent({0, 1})
        assert not m.independent({0, 1, 2})
        assert m.rank({0, 1, 2}) == 2

    def test_parallel_elements_dependent(self):
        m = GraphicMatroid(2, {0: (0, 1), 1: (0, 1)})
        assert not m.independent({0, 1})

    def test_laminar(self):
        m = LaminarMatroid(range(4), [({0, 1}, 1), ({0, 1, 2, 3}, 2)])
        assert m.independent({0, 2})
        assert not m.independent({0, 1})
        assert not m.independent({0, 2, 3})
        assert m.rank(range(4)) == 2

    def test_laminar_rejects_crossing(self):
        with pytest.raises(MatroidError):
            LaminarMatroid(range(3), [({0, 1}, 1), ({1, 2}, 1)])

    def test_contraction(self):
        m = GraphicMatroid(4, {0: (0, 1), 1: (1, 2), 2: (2, 3), 3: (3, 0)})
        c = m.contract({0})
        assert c.independent({1, 2})
        assert not c.independent({1, 2, 3})

    @pytest.mark.parametrize("seed", range(10))
    def test_exchange_property_spot_check(self, seed):
        rng = random.Random(seed)
        m = random_graphic(rng, 5, 7)
        ground = sorted(m.ground)
        sets = [set(s) for r in range(4) for s in itertools.combinations(ground, r)
                if m.independent(s)]
        for a in sets:
            for b in sets:
                if len(b) == len(a) + 1:
                    assert any(m.independent(a | {e}) for e in b - a)


class TestIntersection:
    def test_free_matroids(self):
        m1 = FreeMatroid(range(3))
        m2 = FreeMatroid(range(3))
        assert matroid_intersect_max(m1, m2) == {0, 1, 2}

    def test_triangle_vs_partition(self):
        g = GraphicMatroid(3, {0: (0, 1), 1: (1, 2), 2: (2, 0)})
        p = PartitionMatroid([({0}, 1), ({1}, 1), ({2}, 0)])
        got = matroid_intersect_max(g, p)
        assert len(got) == 2 == brute_max_common(g, p)

    def test_rank_zero_side(self):
        m1 = PartitionMatroid([(frozenset(range(3)), 0)])
        m2 = FreeMatroid(range(3))
        assert matroid_intersect_max(m1, m2) == set()

    def test_ground_mismatch(self):
        with pytest.raises(MatroidError):
            matroid_intersect_max(FreeMatroid({1}), FreeMatroid({2}))

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_bruteforce(self, seed):
        rng = random.Random(seed + 500)
        n_el = rng.randrange(3, 9)
        m1 = random_graphic(rng, rng.randrange(3, 6), n_el)
        caps = []
        remaining = sorted(m1.ground)
        rng.shuffle(remaining)
        while remaining:
            k = min(len(remaining), rng.randrange(1, 4))
            group, remaining = remaining[:k], remaining[k:]
            caps.append((frozenset(group), rng.randrange(0, k + 1)))
        m2 = PartitionMatroid(caps)
        got = matroid_intersect_max(m1, m2)
        assert m1.independent(got) and m2.independent(got)
        assert len(got) == brute_max_common(m1, m2)

    @pytest.mark.parametrize("seed", range(10))
    def test_cover_certifies_optimum(self, seed):
        rng = random.Random(seed + 900)
        m1 = random_graphic(rng, 4, 6)
        m2 = random_graphic(rng, 4, 6)
        m2 = GraphicMatroid(4, {e: m2.endpoints[e] for e in sorted(m1.ground)})
        best = matroid_intersect_max(m1, m2)
        q = max_min_rank_cover(m1, m2, best)
        ground = set(m1.ground)
        assert m1.rank(q) + m2.rank(ground - q) == len(best)
        # maximality: no further element keeps the value
        for e in sorted(ground - q):
            assert m1.rank(q | {e}) + m2.rank(ground - q - {e}) > len(best)


class TestUnionColor:
    def test_empty_u_ok(self):
        m = GraphicMatroid(3, {0: (0, 1), 1: (1, 2), 2: (2, 0)})
        x, y = union_color(m, {0, 1}, {2}, set())
        assert x == set() and y == set()

    def test_free_matroid(self):
        m = FreeMatroid(range(4))
        x, y = union_color(m, {0}, {1}, {2, 3})
        assert x | y == {2, 3} and not (x & y)

    def test_triangle_example(self):
        m = GraphicMatroid(3, {0: (0, 1), 1: (1, 2), 2: (2, 0)})
        x, y = union_color(m, {0}, {1}, {2})
        assert m.rank({0} | x) + m.rank({1} | y) >= m.rank({0, 1}) + m.rank({2})

    @pytest.mark.parametrize("seed", range(40))
    def test_random_graphic_instances(self, seed):
        rng = random.Random(seed * 13 + 1)
        m = random_graphic(rng, rng.randrange(3, 6), rng.randrange(3, 9))
        elems = sorted(m.ground)
        labels = [rng.randrange(3) for _ in elems]
        R = {e for e, l in zip(elems, labels) if l == 0}
        B = {e for e, l in zip(elems, labels) if l == 1}
        U = {e for e, l in zip(elems, labels) if l == 2}
        x, y = union_color(m, R, B, U)
        assert x | y == U and not (x & y)
        assert m.rank(R | x) + m.rank(B | y) >= m.rank(R | B) + m.rank(U)


def brute_two_coloring_exists(n, R, B, U):
    """Check by enumeration whether U splits into two forest-extensions."""
    forest = GraphicMatroid(n, {**R, **B, **U})
    for r in range(len(U) + 1):
        for reds in itertools.combinations(sorted(U), r):
            reds = set(reds)
            blues = set(U) - reds
            if forest.independent(set(R) | reds) and \
                    forest.independent(set(B) | blues):
                return True
    return False


class TestForestColor:
    def test_parallel_edge_uncolorable(self):
        # circuit 0-1-2 with R = {01}, B = {12, 20}; U = parallel copy of 01
        R = {0: (0, 1)}
        B = {1: (1, 2), 2: (2, 0)}
        U = {3: (0, 1)}
        assert not brute_two_coloring_exists(3, R, B, U)
        u_r, u_b, z = forest_color(3, R, B, U)
        assert z == {3} and not u_r and not u_b

    def test_chord_colorable(self):
        # square circuit with a lopsided split: the chord fits the red side
        R = {0: (0, 1)}
        B = {1: (1, 2), 2: (2, 3), 3: (3, 0)}
        U = {4: (0, 2)}
        assert brute_two_coloring_exists(4, R, B, U)
        u_r, u_b, z = forest_color(4, R, B, U)
        assert not z and u_r | u_b == {4}

    def test_both_paths_close_chord_uncolorable(self):
        # endpoints of the chord joined by a red path and a blue path
        R = {0: (0, 1), 1: (1, 2)}
        B = {2: (2, 3), 3: (3, 0)}
        U = {4: (0, 2)}
        assert not brute_two_coloring_exists(4, R, B, U)
        u_r, u_b, z = forest_color(4, R, B, U)
        assert z == {4}

    def test_exhaustive_small_circuits(self):
        # all circuits up to 8 edges x forests U up to 4 edges (sampled
        # deterministically), checking |Z| <= 1 and both color classes acyclic
        rng = random.Random(0)
        for m_c in range(3, 9):
            verts = list(range(m_c))
            circuit = {i: (verts[i], verts[(i + 1) % m_c]) for i in range(m_c)}
            for trial in range(30):
                cut = rng.randrange(1, m_c)
                R = {i: circuit[i] for i in range(cut)}
                B = {i: circuit[i] for i in range(cut, m_c)}
                forest_edges = {}
                attempts = 0
                while len(forest_edges) < min(4, rng.randrange(1, 5)) and attempts < 20:
                    attempts += 1
                    u = rng.randrange(m_c)
                    v = rng.randrange(m_c)
                    if u == v:
                        continue
                    cand = dict(forest_edges)
                    cand[100 + len(forest_edges)] = (u, v)
                    if GraphicMatroid(m_c, cand).independent(set(cand)):
                        forest_edges = cand
                if not forest_edges:
                    continue
                u_r, u_b, z = forest_color(m_c, R, B, forest_edges)
                assert len(z) <= 1
                check = GraphicMatroid(m_c, {**R, **B, **forest_edges})
                assert check.independent(set(R) | u_r)
                assert check.independent(set(B) | u_b)
                assert u_r | u_b | z == set(forest_edges)
