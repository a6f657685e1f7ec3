"""Ear decomposition construction, normalization, and orientation."""

import random

import pytest

from sttour.graph import MultiGraph, is_two_vertex_connected
from sttour.ears import (
    BLOCKED,
    HORIZONTAL,
    PENDANT,
    VERTICAL,
    Ear,
    EarDecomposition,
    EarStructureError,
    blocked_4ear_inequality,
    classify_4ear,
    exhaustive_min_even_ears,
    normalize,
    open_ear_decomposition,
    open_min_even_ears,
    orient_clean_forest,
    verify_nice,
)


def circuit(n):
    return MultiGraph(n, [(i, (i + 1) % n) for i in range(n)])


def random_2vc(rng, n, extra=3):
    while True:
        edges = [(i, (i + 1) % n) for i in range(n)]
        pool = [(u, v) for u in range(n) for v in range(u + 1, n)
                if abs(u - v) not in (1, n - 1)]
        rng.shuffle(pool)
        g = MultiGraph(n, edges + pool[:extra])
        if is_two_vertex_connected(g):
            return g


class TestConstruction:
    @pytest.mark.parametrize("n", [3, 4, 5, 6, 9])
    def test_circuit_single_ear(self, n):
        ed = open_ear_decomposition(circuit(n))
        assert len(ed.ears) == 1 and ed.ears[0].length == n
        # an n-ear is even iff n is even
        assert ed.even_ear_count() == 1 - n % 2

    def test_not_2vc_names_cut_vertex(self):
        g = MultiGraph(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])
        with pytest.raises(EarStructureError) as err:
            open_ear_decomposition(g)
        assert "2" in str(err.value)

    def test_k4_minimum_even_ears(self):
        k4 = MultiGraph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
        ed = exhaustive_min_even_ears(k4)
        ed.validate()
        assert ed.even_ear_count() == 1

    def test_theta_minimum_even_ears(self):
        theta = MultiGraph(5, [(0, 2), (2, 1), (0, 3), (3, 1), (0, 4), (4, 1)])
        ed = exhaustive_min_even_ears(theta)
        assert ed.even_ear_count() == 2

    def test_heuristic_never_beats_exact(self):
        rng = random.Random(3)
        for _ in range(10):
            g = random_2vc(rng, rng.randrange(4, 8), extra=rng.randrange(3))
            exact = exhaustive_min_even_ears(g).even_ear_count()
            ed = normalize(open_min_even_ears(g))
            assert ed.even_ear_count() >= exact

    @pytest.mark.parametrize("seed", range(15))
    def test_random_valid(self, seed):
        rng = random.Random(seed)
        g = random_2vc(rng, rng.randrange(5, 25), extra=rng.randrange(8))
        ed = open_ear_decomposition(g)
        ed.validate()
        assert all(not e.closed for e in ed.ears[1:])


def hand_decomposition(extra):
    """C6 plus hand-placed ears; ``extra`` maps walks to nothing (edges are
    created on the fly).  Returns the decomposition."""
    edges = [(i, (i + 1) % 6) for i in range(6)]
    walks = [tuple(range(6)) + (0,)]
    for walk in extra:
        walks.append(tuple(walk))
        for a, b in zip(walk, walk[1:]):
            edges.append((a, b))
    n = max(max(w) for w in walks) + 1
    g = MultiGraph(n, edges)
    ears = []
    eid = 6
    ears.append(Ear(walks[0], tuple(range(6)), uid=0))
    for k, walk in enumerate(walks[1:], start=1):
        ids = tuple(range(eid, eid + len(walk) - 1))
        eid += len(walk) - 1
        ears.append(Ear(walk, ids, uid=k))
    return EarDecomposition(g, 0, ears, [])


class TestNormalize:
    def test_already_nice_fixpoint(self):
        ed = hand_decomposition([(1, 6, 3)])
        out = normalize(ed)
        assert normalize(out).dump() == out.dump()

    def test_o1_removes_nonpendant_2ear(self):
        # second 2-ear attached to the first one's internal vertex
        ed = hand_decomposition([(1, 6, 3), (6, 7, 4)])
        assert not ed.is_pendant_ear(1)
        trace = []
        out = normalize(ed, trace=trace)
        assert "O1" in [t[0] for t in trace]
        assert len(out.trivial) == len(ed.trivial) + 1
        assert verify_nice(out).all_ok()

    def test_o8_witness(self):
        # 4-ear with a 3-ear attached at its first internal vertex
        ed = hand_decomposition([(1, 6, 7, 8, 3), (6, 9, 10, 4)])
        trace = []
        out = normalize(ed, trace=trace)
        assert "O8" in [t[0] for t in trace]
        assert any(e.length >= 5 for e in out.ears[1:])
        assert verify_nice(out).all_ok()

    def test_o11_adjacent_3ear_middles(self):
        edges = [(i, (i + 1) % 6) for i in range(6)]
        edges += [(0, 6), (6, 7), (7, 2)]     # 3-ear
        edges += [(3, 8), (8, 9), (9, 5)]     # 3-ear
        edges += [(7, 8)]                     # adjacent middles
        g = MultiGraph(10, edges)
        ears = [Ear(tuple(range(6)) + (0,), tuple(range(6)), 0),
                Ear((0, 6, 7, 2), (6, 7, 8), 1),
                Ear((3, 8, 9, 5), (9, 10, 11), 2)]
        ed = EarDecomposition(g, 0, ears, [12])
        rep = verify_nice(ed)
        assert not rep.c_ok and rep.witnesses["c"]
        trace = []
        out = normalize(ed, trace=trace)
        assert "O11" in [t[0] for t in trace]
        assert verify_nice(out).all_ok()

    def test_even_count_never_increases(self):
        rng = random.Random(11)
        for _ in range(40):
            g = random_2vc(rng, rng.randrange(6, 30), extra=rng.randrange(1, 8))
            trace = []
            out = normalize(open_ear_decomposition(g), trace=trace)
            assert all(t[1] >= 0 for t in trace)
            assert verify_nice(out).all_ok()

    def test_lexicographic_potential(self):
        rng = random.Random(12)
        for _ in range(30):
            g = random_2vc(rng, rng.randrange(6, 25), extra=rng.randrange(1, 6))
            trace = []
            normalize(open_ear_decomposition(g), trace=trace)
            for op, dev, before, after in trace:
                if dev == 0 and op != "O13":
                    assert after < before

    def test_blocked_inequality_on_corpus(self):
        rng = random.Random(13)
        for _ in range(40):
            g = random_2vc(rng, rng.randrange(6, 40), extra=rng.randrange(1, 10))
            out = normalize(open_ear_decomposition(g))
            ok, blocked, nonblocked, k5 = blocked_4ear_inequality(out)
            assert ok


class TestClassify4Ear:
    def test_pendant(self):
        ed = hand_decomposition([(1, 6, 7, 8, 3)])
        assert classify_4ear(ed, 1) == PENDANT

    def test_blocked_by_closed_ear(self):
        ed = hand_decomposition([(1, 6, 7, 8, 3), (7, 9, 10, 11, 12, 7)])
        assert classify_4ear(ed, 1) == BLOCKED

    def test_horizontal(self):
        ed = hand_decomposition([(1, 6, 7, 8, 3), (6, 9, 8)])
        assert ed.g.degree(7) == 2 and ed.g.degree(9) == 2
        assert classify_4ear(ed, 1) == HORIZONTAL

    def test_vertical(self):
        ed = hand_decomposition([(1, 6, 7, 8, 3), (7, 9, 4)])
        assert classify_4ear(ed, 1) == VERTICAL

    def test_wrong_length_rejected(self):
        ed = hand_decomposition([(1, 6, 3)])
        with pytest.raises(ValueError):
            classify_4ear(ed, 1)


class TestOrientation:
    def test_empty_choice(self):
        ed = hand_decomposition([(1, 6, 3), (2, 7, 4)])
        woed = orient_clean_forest(ed, [])
        assert woed.pi == len(ed.ears)
        assert not woed.orientation

    def test_single_2ear_rooted_at_min_ear(self):
        ed = hand_decomposition([(1, 6, 3)])
        woed = orient_clean_forest(ed, [1])
        # root is the endpoint with minimal (ear index, vertex id) = vertex 1
        assert woed.root_of[6] == 1
        assert woed.orientation[6] == (1, 6) and woed.orientation[7] == (6, 3)
        assert woed.entering[0] == [(1, 3)]
        assert woed.pi == 1    # the oriented 2-ear itself is non-entered

    def test_chain_of_two_2ears(self):
        ed = hand_decomposition([(2, 6, 4), (1, 7, 2)])
        woed = orient_clean_forest(ed, [1, 2])
        # single arborescence 1 -> 7 -> 2 -> 6 -> 4 of depth 4
        assert woed.root_of[6] == woed.root_of[7] == 1
        heads = {woed.orientation[e] for e in woed.orientation}
        assert (1, 7) in heads and (7, 2) in heads
        assert (2, 6) in heads and (6, 4) in heads
        assert woed.entering[0] == [(1, 4), (2, 2)]

    def test_cycle_rejected(self):
        ed = hand_decomposition([(1, 6, 3), (1, 7, 3)])
        with pytest.raises(EarStructureError):
            orient_clean_forest(ed, [1, 2])

    def test_nonpendant_rejected(self):
        ed = hand_decomposition([(1, 6, 3), (6, 7, 4)])
        with pytest.raises(EarStructureError):
            orient_clean_forest(ed, [1])
