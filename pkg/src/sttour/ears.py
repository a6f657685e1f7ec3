"""Ear decompositions: construction, normalization, classification, orientation.

An ear decomposition grows a 2-vertex-connected graph from a root vertex by
a first circuit and then open paths.  ``normalize`` rewrites a decomposition
until every short ear is pendant, every 4-ear falls into one of four shapes
(blocked, pendant, vertical, horizontal), and internal vertices of distinct
outer ears are only adjacent in the sanctioned patterns.  The rewrite steps
never increase the number of even ears.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .graph import GraphError, MultiGraph, find_cut_vertex


class EarStructureError(GraphError):
    pass


class NormalizationStuck(GraphError):
    def __init__(self, message, potential):
        self.potential = potential
        super().__init__(f"{message} (potential={potential})")


@dataclass(frozen=True)
class Ear:
    """A path or circuit: vertex walk v0..vk with the joining edge ids."""

    vertices: tuple
    edge_ids: tuple
    uid: int = -1

    def __post_init__(self):
        if len(self.vertices) != len(self.edge_ids) + 1:
            raise EarStructureError("vertex/edge count mismatch")

    @property
    def length(self) -> int:
        return len(self.edge_ids)

    @property
    def closed(self) -> bool:
        return self.vertices[0] == self.vertices[-1]

    @property
    def internal(self) -> tuple:
        return self.vertices[1:-1]

    @property
    def endpoints(self) -> tuple:
        return (self.vertices[0], self.vertices[-1])

    @property
    def short(self) -> bool:
        return self.length in (2, 3)

    @property
    def long(self) -> bool:
        return self.length >= 4

    @property
    def even(self) -> bool:
        return self.length % 2 == 0


class EarDecomposition:
    """Ordered nontrivial ears over a graph, plus the trivial (1-edge) ears."""

    def __init__(self, g: MultiGraph, root: int, ears: Iterable[Ear],
                 trivial: Iterable[int], check: bool = True):
        self.g = g
        self.root = root
        self.ears = tuple(ears)
        self.trivial = frozenset(trivial)
        self._ear_of = {}
        for idx, ear in enumerate(self.ears):
            for v in ear.internal:
                self._ear_of[v] = idx
        if check:
            self.validate()

    def validate(self) -> None:
        g = self.g
        used = set(self.trivial)
        covered = {self.root}
        for idx, ear in enumerate(self.ears):
            if ear.length < 2:
                raise EarStructureError(f"ear {idx} has length {ear.length}")
            walk = ear.vertices
            inner = walk[1:-1]
            if len(set(inner)) != len(inner) or any(v in (walk[0], walk[-1]) for v in inner):
                raise EarStructureError(f"ear {idx} repeats a vertex")
            for j, eid in enumerate(ear.edge_ids):
                if eid in used:
                    raise EarStructureError(f"edge {eid} used twice")
                used.add(eid)
                u, v = g.endpoints(eid)
                if {u, v} != {walk[j], walk[j + 1]}:
                    raise EarStructureError(f"edge {eid} does not match walk of ear {idx}")
            if walk[0] not in covered or walk[-1] not in covered:
                raise EarStructureError(f"ear {idx} endpoint not yet covered")
            if not ear.closed and walk[0] == walk[-1]:
                raise EarStructureError("inconsistent open flag")
            for v in inner:
                if v in covered:
                    raise EarStructureError(f"vertex {v} internal to two ears")
                covered.add(v)
        if covered != set(range(g.n)):
            raise EarStructureError("ears do not cover every vertex")
        if used != set(range(g.m)):
            raise EarStructureError("ears do not partition the edge set")
        for eid in self.trivial:
            u, v = g.endpoints(eid)

    def ear_of(self, v: int) -> Optional[int]:
        """Index of the ear having v as an internal vertex (root -> None)."""
        return self._ear_of.get(v)

    def counts(self) -> dict:
        k = {2: 0, 3: 0, 4: 0, "ge5": 0}
        for ear in self.ears:
            if ear.length >= 5:
                k["ge5"] += 1
            elif ear.length in k:
                k[ear.length] += 1
        return {"k2": k[2], "k3": k[3], "k4": k[4], "k_ge5": k["ge5"]}

    def even_ear_count(self) -> int:
        return sum(1 for ear in self.ears if ear.even)

    def is_pendant_vertex(self, v: int) -> bool:
        """Not an endpoint of any nontrivial ear."""
        for ear in self.ears:
            if v in ear.endpoints:
                return False
        return True

    def is_pendant_ear(self, idx: int) -> bool:
        return all(self.is_pendant_vertex(v) for v in self.ears[idx].internal)

    def attached_to(self, idx: int) -> list:
        """(ear index, attachment vertex) pairs of nontrivial ears attached
        to ear ``idx``, in decomposition order."""
        inner = set(self.ears[idx].internal)
        out = []
        for j, ear in enumerate(self.ears):
            if j == idx:
                continue
            for v in ear.endpoints:
                if v in inner:
                    out.append((j, v))
        return sorted(out)

    def dump(self) -> str:
        lines = []
        for idx, ear in enumerate(self.ears):
            kind = "closed" if ear.closed else "open"
            verts = " ".join(str(v) for v in ear.vertices)
            lines.append(f"ear {idx} {kind} {ear.length} {verts}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Construction


def open_ear_decomposition(g: MultiGraph, root: int = 0) -> EarDecomposition:
    """Chain decomposition: DFS tree plus back edges, one chain per back edge.

    For a 2-vertex-connected graph the first chain is a circuit through the
    root and all later chains are open.
    """
    if g.n == 0:
        raise EarStructureError("empty graph")
    cut = find_cut_vertex(g)
    if cut is not None:
        raise EarStructureError(f"graph is not 2-vertex-connected (cut vertex {cut})")
    parent_edge = [-1] * g.n
    order = []
    seen = [False] * g.n
    stack = [(root, -1)]
    while stack:
        v, pe = stack.pop()
        if seen[v]:
            continue
        seen[v] = True
        parent_edge[v] = pe
        order.append(v)
        for eid, w in reversed(g.incident(v)):
            if not seen[w]:
                stack.append((w, eid))
    if len(order) < g.n:
        raise EarStructureError("graph is disconnected")
    pos = {v: i for i, v in enumerate(order)}
    tree_edges = {parent_edge[v] for v in order if parent_edge[v] != -1}

    marked = [False] * g.n
    marked[root] = True
    ears = []
    used_edges: set[int] = set()
    trivial = []
    uid = 0
    for v in order:
        for eid, w in g.incident(v):
            if eid in tree_edges or pos[w] <= pos[v]:
                continue
            # back edge from descendant w up to v; chain walks from v to w
            # and then up the tree until a marked vertex.
            walk = [v, w]
            eids = [eid]
            cur = w
            while not marked[cur]:
                marked[cur] = True
                pe = parent_edge[cur]
                eids.append(pe)
                cur = g.other_end(pe, cur)
                walk.append(cur)
            used_edges.update(eids)
            if len(eids) == 1:
                trivial.append(eid)
            else:
                ears.append(Ear(tuple(walk), tuple(eids), uid))
                uid += 1
    leftover = set(range(g.m)) - used_edges
    for eid in sorted(leftover):
        if eid in tree_edges:
            raise EarStructureError(f"bridge edge {eid} (graph not 2-edge-connected)")
        trivial.append(eid)
    if ears and ears[0].closed and ears[0].vertices[0] == root:
        pass
    else:
        raise EarStructureError("first chain is not a circuit through the root")
    for ear in ears[1:]:
        if ear.closed:
            raise EarStructureError("later chain closed; graph not 2-vertex-connected")
    return EarDecomposition(g, root, ears, trivial)


def exhaustive_min_even_ears(g: MultiGraph) -> EarDecomposition:
    """Exact minimum-even-ear open decomposition by exhaustive search.

    Only for small graphs; explores every decomposition over every root and
    keeps one with the fewest even nontrivial ears, preferring open ears.
    """
    if g.n > 10:
        raise EarStructureError("exhaustive backend limited to 10 vertices")

    best: dict = {"count": None, "ears": None, "root": None}

    def paths_from(covered, used, a):
        # enumerate simple paths/circuits from covered vertex a over fresh
        # vertices, returning (walk, eids) ending at a covered vertex
        out = []
        stack = [([a], [])]
        while stack:
            walk, eids = stack.pop()
            v = walk[-1]
            for eid, w in g.incident(v):
                if eid in used or eid in eids:
                    continue
                if w in covered:
                    if len(eids) >= 1 and (w != a or len(eids) + 1 >= 2):
                        out.append((walk + [w], eids + [eid]))
                elif w not in walk:
                    stack.append((walk + [w], eids + [eid]))
        return out

    def search(root, covered, used, ears, evens):
        if best["count"] is not None and evens >= best["count"]:
            return
        if len(covered) == g.n:
            total_even = evens
            if best["count"] is None or total_even < best["count"]:
                best["count"] = total_even
                best["ears"] = list(ears)
                best["root"] = root
            return
        seen_sig = set()
        for a in sorted(covered):
            for walk, eids in paths_from(covered, used, a):
                if not ears and (walk[0] != root or walk[-1] != root):
                    continue
                if ears and walk[0] == walk[-1]:
                    continue  # keep the decomposition open
                sig = frozenset(eids)
                if sig in seen_sig:
                    continue
                seen_sig.add(sig)
                new_cov = covered | set(walk)
                ears.append((tuple(walk), tuple(eids)))
                search(root, new_cov, used | set(eids), ears,
                       evens + (1 - len(eids) % 2))
                ears.pop()

    for root in range(g.n):
        search(root, {root}, set(), [], 0)
        if best["count"] == 0:
            break
    if best["ears"] is None:
        raise EarStructureError("no open ear decomposition exists")
    used = set()
    ears = [Ear(w, e, uid=i) for i, (w, e) in enumerate(best["ears"])]
    for ear in ears:
        used.update(ear.edge_ids)
    trivial = [eid for eid in range(g.m) if eid not in used]
    return EarDecomposition(g, best["root"], ears, trivial)


def open_min_even_ears(g: MultiGraph, exact: bool = False) -> EarDecomposition:
    """Open ear decomposition with few even ears.

    The default backend is heuristic (chain decomposition; the normalization
    rewrites reduce even ears opportunistically and never increase them).
    ``exact=True`` switches to the exhaustive small-graph backend, which
    certifies the true minimum.
    """
    if exact:
        return exhaustive_min_even_ears(g)
    return open_ear_decomposition(g)


# ---------------------------------------------------------------------------
# Nice-ness verification


BLOCKED, PENDANT, VERTICAL, HORIZONTAL, OTHER = (
    "blocked", "pendant", "vertical", "horizontal", "other")


def classify_4ear(ed: EarDecomposition, idx: int) -> str:
    ear = ed.ears[idx]
    if ear.length != 4:
        raise ValueError(f"ear {idx} has length {ear.length}, not 4")
    attached = ed.attached_to(idx)
    if any(ed.ears[j].closed for j, _ in attached):
        return BLOCKED
    if not attached:
        return PENDANT
    v1, v2, v3 = ear.internal
    g = ed.g

    def middle_of_2ear(j):
        return ed.ears[j].length == 2 and ed.ears[j].internal[0]

    # vertical: v1, v3 pendant and non-adjacent; only 2-ears at v2, their
    # middles not adjacent to v1 or v3
    if ed.is_pendant_vertex(v1) and ed.is_pendant_vertex(v3) \
            and not g.has_edge(v1, v3):
        ok = True
        for j, at in attached:
            if at != v2 or ed.ears[j].length != 2:
                ok = False
                break
            x = ed.ears[j].internal[0]
            if g.has_edge(x, v1) or g.has_edge(x, v3):
                ok = False
                break
        if ok:
            return VERTICAL
    # horizontal: v2 has degree 2; attachments are v1-x-v3 2-ears with
    # degree-2 middles
    if g.degree(v2) == 2:
        ok = True
        for j, at in attached:
            e2 = ed.ears[j]
            if e2.length != 2 or set(e2.endpoints) != {v1, v3} \
                    or g.degree(e2.internal[0]) != 2:
                ok = False
                break
        if ok:
            return HORIZONTAL
    return OTHER


def is_outer(ed: EarDecomposition, idx: int) -> bool:
    """Outer ears: short ears plus pendant/vertical/horizontal 4-ears."""
    ear = ed.ears[idx]
    if ear.short:
        return True
    if ear.length == 4:
        return classify_4ear(ed, idx) in (PENDANT, VERTICAL, HORIZONTAL)
    return False


@dataclass
class NiceReport:
    a_ok: bool
    b_ok: bool
    c_ok: bool
    witnesses: dict = field(default_factory=dict)

    def all_ok(self) -> bool:
        return self.a_ok and self.b_ok and self.c_ok


def verify_nice(ed: EarDecomposition) -> NiceReport:
    """Check properties: (a) short ears open and pendant, (b) classified
    4-ears and no closed-4 on closed-4, (c) restricted adjacency between
    internal vertices of outer ears."""
    report = NiceReport(True, True, True)
    for idx, ear in enumerate(ed.ears):
        if ear.short:
            if ear.closed and idx != 0:
                report.a_ok = False
                report.witnesses.setdefault("a", []).append((idx, "closed short ear"))
            elif not ed.is_pendant_ear(idx):
                report.a_ok = False
                report.witnesses.setdefault("a", []).append((idx, "nonpendant short ear"))
    for idx, ear in enumerate(ed.ears):
        if ear.length != 4:
            continue
        kind = classify_4ear(ed, idx)
        if kind == OTHER:
            report.b_ok = False
            report.witnesses.setdefault("b", []).append((idx, "unclassified 4-ear"))
        if ear.closed and idx != 0:    # the first ear counts as open
            for j, _ in ed.attached_to(idx):
                if ed.ears[j].length == 4 and ed.ears[j].closed and j != 0:
                    report.b_ok = False
                    report.witnesses.setdefault("b", []).append(
                        (idx, f"closed 4-ear {j} attached to closed 4-ear"))
    outer = [idx for idx in range(len(ed.ears)) if is_outer(ed, idx)]
    outer_set = set(outer)
    middle4 = set()
    for idx in outer:
        if ed.ears[idx].length == 4:
            middle4.add(ed.ears[idx].internal[1])
    for eid in range(ed.g.m):
        u, v = ed.g.endpoints(eid)
        pu, pv = ed.ear_of(u), ed.ear_of(v)
        if pu is None or pv is None or pu == pv:
            continue
        if pu not in outer_set or pv not in outer_set:
            continue
        # "P attached to Q at w": w internal to Q and an endpoint of P
        p_att_q = v in ed.ears[pu].endpoints
        q_att_p = u in ed.ears[pv].endpoints
        both_mid = u in middle4 and v in middle4
        if not (p_att_q or q_att_p or both_mid):
            report.c_ok = False
            report.witnesses.setdefault("c", []).append(
                (pu, pv, u, v, "bad adjacency between outer ears"))
    for idx in range(len(ed.ears)):
        if ed.ears[idx].length != 2:
            continue
        hosts = {ed.ear_of(v) for v in ed.ears[idx].endpoints}
        hosts = {h for h in hosts if h is not None and h != idx
                 and ed.ears[h].length == 4 and h in outer_set}
        if len(hosts) == 2:
            report.c_ok = False
            report.witnesses.setdefault("c", []).append(
                (idx, tuple(sorted(hosts)), "2-ear attached to two outer 4-ears"))
    return report


def blocked_4ear_inequality(ed: EarDecomposition) -> tuple[bool, int, int, int]:
    """Blocked 4-ears never outnumber 2*k_{>=5} + non-blocked 4-ears."""
    blocked = nonblocked = 0
    for idx, ear in enumerate(ed.ears):
        if ear.length == 4:
            if classify_4ear(ed, idx) == BLOCKED:
                blocked += 1
            else:
                nonblocked += 1
    k_ge5 = ed.counts()["k_ge5"]
    return blocked <= 2 * k_ge5 + nonblocked, blocked, nonblocked, k_ge5


# ---------------------------------------------------------------------------
# Normalization (rewrite system)


class _Work:
    """Mutable rewrite workspace over one decomposition."""

    def __init__(self, ed: EarDecomposition):
        self.g = ed.g
        self.root = ed.root
        self.ears = [Ear(e.vertices, e.edge_ids, e.uid) for e in ed.ears]
        self.trivial = set(ed.trivial)
        self.next_uid = max((e.uid for e in self.ears), default=-1) + 1

    def new_ear(self, vertices, edge_ids) -> Ear:
        ear = Ear(tuple(vertices), tuple(edge_ids), self.next_uid)
        self.next_uid += 1
        return ear

    def freeze(self) -> EarDecomposition:
        return EarDecomposition(self.g, self.root, self.ears, self.trivial)

    # -- derived views ----------------------------------------------------

    def ear_of(self) -> dict:
        out = {}
        for idx, ear in enumerate(self.ears):
            for v in ear.internal:
                out[v] = idx
        return out

    def endpoint_counts(self) -> dict:
        out: dict = {}
        for ear in self.ears:
            for v in set(ear.endpoints):
                out.setdefault(v, []).append(ear.uid)
        return out

    def is_pendant_vertex(self, v) -> bool:
        return all(v not in ear.endpoints for ear in self.ears)

    def is_pendant_ear(self, idx) -> bool:
        return all(self.is_pendant_vertex(v) for v in self.ears[idx].internal)

    def attached(self, idx) -> list:
        inner = set(self.ears[idx].internal)
        out = []
        for j, ear in enumerate(self.ears):
            if j != idx:
                for v in ear.endpoints:
                    if v in inner:
                        out.append((j, v))
        return sorted(out)

    def even_count(self) -> int:
        return sum(1 for e in self.ears if e.even)

    def potential(self) -> tuple:
        mid_triv = 0
        ed = self.freeze()
        middles = set()
        for idx, ear in enumerate(ed.ears):
            if ear.length == 4 and classify_4ear(ed, idx) in (
                    PENDANT, VERTICAL, HORIZONTAL):
                middles.add(ear.internal[1])
        for eid in self.trivial:
            u, v = self.g.endpoints(eid)
            if u in middles or v in middles:
                mid_triv += 1
        fours = sum(1 for e in self.ears if e.length == 4)
        return (-len(self.trivial), fours, mid_triv)

    def reorder(self) -> None:
        """Stable valid order: non-pendant ears first (topologically), then
        pendant ears by nonincreasing length, then only trivial ears."""
        pend = [e for i, e in enumerate(self.ears) if self.is_pendant_ear(i)]
        rest = [e for i, e in enumerate(self.ears) if not self.is_pendant_ear(i)]
        covered = {self.root}
        placed = []
        while rest:
            for i, ear in enumerate(rest):
                if ear.vertices[0] in covered and ear.vertices[-1] in covered:
                    placed.append(rest.pop(i))
                    covered.update(ear.internal)
                    break
            else:
                raise EarStructureError("cyclic attachment between ears")
        pend.sort(key=lambda e: (-e.length, e.uid))
        self.ears = placed + pend

    def replace(self, remove_idx: Iterable[int], add: Iterable[Ear],
                consume_trivial: Iterable[int] = (),
                release_trivial: Iterable[int] = ()) -> None:
        remove = set(remove_idx)
        kept = [e for i, e in enumerate(self.ears) if i not in remove]
        self.ears = kept + list(add)
        for eid in consume_trivial:
            self.trivial.discard(eid)
        for eid in release_trivial:
            self.trivial.add(eid)
        self.reorder()


def _walk_between(ear: Ear, a: int, b: int) -> tuple:
    """(vertices, edge ids) of the sub-walk of an open ear between a and b."""
    vs = ear.vertices
    ia, ib = vs.index(a), vs.index(b)
    if ia > ib:
        ia, ib = ib, ia
        flip = True
    else:
        flip = False
    verts = vs[ia:ib + 1]
    eids = ear.edge_ids[ia:ib]
    if flip:
        verts = tuple(reversed(verts))
        eids = tuple(reversed(eids))
    return verts, eids


def _oriented(ear: Ear, start: int) -> tuple:
    """Vertex walk and edge ids of an open ear, starting from ``start``."""
    if ear.vertices[0] == start:
        return ear.vertices, ear.edge_ids
    if ear.vertices[-1] == start:
        return tuple(reversed(ear.vertices)), tuple(reversed(ear.edge_ids))
    raise EarStructureError(f"{start} is not an endpoint")


def _splice(work: _Work, parts: list) -> tuple:
    """Concatenate (vertices, eids) fragments into one walk."""
    verts = [parts[0][0][0]]
    eids = []
    for pv, pe in parts:
        assert pv[0] == verts[-1]
        verts.extend(pv[1:])
        eids.extend(pe)
    return tuple(verts), tuple(eids)


def _rotate_closed(verts: tuple, eids: tuple, start: int) -> tuple:
    """Rotate a closed walk so that it starts and ends at ``start``."""
    assert verts[0] == verts[-1]
    ring = verts[:-1]
    i = ring.index(start)
    new_v = ring[i:] + ring[:i] + (start,)
    new_e = eids[i:] + eids[:i]
    return new_v, new_e


def normalize(ed: EarDecomposition, max_steps: Optional[int] = None,
              trace: Optional[list] = None) -> EarDecomposition:
    """Rewrite until the decomposition is nice; even ears never increase.

    Raises NormalizationStuck if the step budget is exhausted or no rewrite
    applies while some property is still violated (with multigraph inputs
    and a heuristic even-ear start, completeness is only guaranteed on the
    patterns the rewrite rules cover).
    """
    work = _Work(ed)
    work.reorder()
    budget = max_steps if max_steps is not None else max(200, ed.g.n ** 4)
    steps = 0
    while True:
        evens_before = work.even_count()
        pot_before = work.potential()
        op = _apply_one(work)
        if op is None:
            break
        steps += 1
        if steps > budget:
            raise NormalizationStuck("step budget exceeded", work.potential())
        evens_after = work.even_count()
        if evens_after > evens_before:
            raise NormalizationStuck(f"{op} increased even ears", work.potential())
        if trace is not None:
            trace.append((op, evens_before - evens_after,
                          pot_before, work.potential()))
        if evens_after == evens_before and not work.potential() < pot_before \
                and op not in ("O13",):
            raise NormalizationStuck(f"{op} made no progress", work.potential())
    out = work.freeze()
    report = verify_nice(out)
    if not report.all_ok():
        raise NormalizationStuck(f"no rule applies but not nice: {report.witnesses}",
                                 work.potential())
    return out


def _apply_one(work: _Work) -> Optional[str]:
    op = _fix_first_circuit(work)
    if op:
        return op
    op = _fix_short_ears(work)
    if op:
        return op
    op = _fix_4ears(work)
    if op:
        return op
    return _fix_adjacency(work)


def _fix_first_circuit(work: _Work) -> Optional[str]:
    """Grow a short nonpendant first circuit by absorbing the next ear.

    Keeps the decomposition rooted while removing short closed ears, which
    the path-based rewrites cannot touch.
    """
    if not work.ears:
        return None
    first = work.ears[0]
    if not first.closed or first.length > 3 or work.is_pendant_ear(0):
        return None
    att = work.attached(0)
    if not att:
        return None
    j, v = att[0]
    q = work.ears[j]
    z = q.endpoints[0] if q.endpoints[1] == v else q.endpoints[1]
    if z == v:
        return None
    ring = first.vertices[:-1]
    k = len(ring)
    iv, iz = ring.index(v), ring.index(z)
    # two arcs of the circuit between v and z
    arcs = []
    for direction in (1, -1):
        verts = [v]
        eids = []
        i = iv
        while verts[-1] != z:
            nxt = (i + direction) % k
            eid = first.edge_ids[i] if direction == 1 else first.edge_ids[(i - 1) % k]
            eids.append(eid)
            verts.append(ring[nxt])
            i = nxt
        arcs.append((tuple(verts), tuple(eids)))
    qv, qe = _oriented(q, z)
    options = []
    for keep, other in ((arcs[0], arcs[1]), (arcs[1], arcs[0])):
        inner_other = other[0][1:-1]
        if work.root in inner_other:
            continue  # the new first circuit must pass through the root
        circuit_v, circuit_e = _splice(work, [(qv, qe), keep])
        circuit_v, circuit_e = _rotate_closed(circuit_v, circuit_e, work.root)
        new_ears = [work.new_ear(circuit_v, circuit_e)]
        release = []
        if len(other[1]) == 1:
            release = [other[1][0]]
        else:
            new_ears.append(work.new_ear(*other))
        evens = sum(1 for e in new_ears if e.length % 2 == 0)
        evens += sum(1 for i, e in enumerate(work.ears)
                     if i not in (0, j) and e.even)
        options.append((evens, -len(circuit_e), new_ears, release))
    if not options:
        return None
    options.sort(key=lambda o: (o[0], o[1]))
    evens, _, new_ears, release = options[0]
    if evens > work.even_count():
        return None
    work.replace({0, j}, new_ears, release_trivial=release)
    return "grow-first-circuit"


def _fix_short_ears(work: _Work) -> Optional[str]:
    # O1: first nonpendant 2-ear
    for idx, ear in enumerate(work.ears):
        if idx == 0 and ear.closed:
            continue
        if ear.length == 2 and not work.is_pendant_ear(idx):
            open_att = [(j, v) for j, v in work.attached(idx)
                        if not work.ears[j].closed]
            if not open_att:
                return None
            j, v = open_att[0]
            q = work.ears[j]
            qv, qe = _oriented(q, v)          # walk v .. z
            z = qv[-1]
            x, y = ear.endpoints
            # extend q by one ear edge so the result stays open (the tip
            # vertices predate P, so only tip == z can close the ear)
            for edge_pos, tip in ((0, x), (1, y)):
                if tip == z:
                    continue
                cand_v = (tip,) + qv
                cand_e = (ear.edge_ids[edge_pos],) + qe
                other = ear.edge_ids[1 - edge_pos]
                work.replace({idx, j}, [work.new_ear(cand_v, cand_e)],
                             release_trivial=[other])
                return "O1"
            return None
    # O2 / O3: first nonpendant 3-ear (all 2-ears now pendant)
    for idx, ear in enumerate(work.ears):
        if idx == 0 and ear.closed:
            continue
        if ear.length == 3 and not work.is_pendant_ear(idx):
            open_att = [(j, v) for j, v in work.attached(idx)
                        if not work.ears[j].closed]
            if not open_att:
                return None
            j, v = open_att[0]
            q = work.ears[j]
            walk, eids = ear.vertices, ear.edge_ids
            if walk[2] == v:                      # renumber so v = v1
                walk = tuple(reversed(walk))
                eids = tuple(reversed(eids))
            v0, v1, v2, v3 = walk
            q_ends = set(q.endpoints)
            if q_ends == {v1, v2}:
                # O2: middle edge of the 3-ear replaced by q
                qv, qe = _oriented(q, v1)
                new_v, new_e = _splice(work, [((v0, v1), (eids[0],)),
                                              (qv, qe),
                                              ((v2, v3), (eids[2],))])
                work.replace({idx, j}, [work.new_ear(new_v, new_e)],
                             release_trivial=[eids[1]])
                return "O2"
            # O3: extend q by the v1-v3 sub-path; may create a closed ear
            qv, qe = _oriented(q, v1)             # walk v1 .. z
            rev = tuple(reversed(qv)), tuple(reversed(qe))
            new_v, new_e = _splice(work, [rev, ((v1, v2, v3), (eids[1], eids[2]))])
            work.replace({idx, j}, [work.new_ear(new_v, new_e)],
                         release_trivial=[eids[0]])
            return "O3"
    return None


def _fix_4ears(work: _Work) -> Optional[str]:
    ed = work.freeze()
    stuck = []
    for idx, ear in enumerate(work.ears):
        if ear.length != 4:
            continue
        if classify_4ear(ed, idx) != OTHER:
            continue
        op = _fix_one_4ear(work, idx)
        if op:
            return op
        stuck.append(idx)
    if stuck:
        raise NormalizationStuck(
            f"4-ears {stuck} unclassifiable and no rewrite applies",
            work.potential())
    return None


def _valid_walk(verts: tuple) -> bool:
    inner = verts[1:-1]
    return (len(set(inner)) == len(inner)
            and verts[0] not in inner and verts[-1] not in inner)


def _fix_one_4ear(work: _Work, idx: int) -> Optional[str]:
    ear = work.ears[idx]
    v0, v1, v2, v3, v4 = ear.vertices
    e01, e12, e23, e34 = ear.edge_ids
    attached = work.attached(idx)

    # O8/O9/O10 remove attachments other than {v1,v3} 2-ears and only-at-v2
    # 2-ears.
    for j, _ in attached:
        q = work.ears[j]
        if q.closed:
            continue
        q_ends = set(q.endpoints)
        if q_ends == {v1, v3}:
            if q.length >= 3:
                # O9: long ear across v1, v3 absorbs the outer 4-ear edges
                qv, qe = _oriented(q, v1)
                big = _splice(work, [((v0, v1), (e01,)), (qv, qe),
                                     ((v3, v4), (e34,))])
                small = work.new_ear((v1, v2, v3), (e12, e23))
                work.replace({idx, j}, [work.new_ear(*big), small])
                return "O9"
            continue
        hit13 = q_ends & {v1, v3}
        if hit13:
            # O8: replace one 4-ear edge by q
            x = min(hit13)
            z = q.endpoints[0] if q.endpoints[1] == x else q.endpoints[1]
            qv, qe = _oriented(q, x)                 # walk x .. z
            rev = tuple(reversed(qv)), tuple(reversed(qe))
            if x == v1:
                if z == v2:
                    new = _splice(work, [((v0, v1), (e01,)), (qv, qe),
                                         ((v2, v3, v4), (e23, e34))])
                    drop = e12
                else:
                    new = _splice(work, [rev, ((v1, v2, v3, v4),
                                               (e12, e23, e34))])
                    drop = e01
            else:
                if z == v2:
                    new = _splice(work, [((v0, v1, v2), (e01, e12)), rev,
                                         ((v3, v4), (e34,))])
                    drop = e23
                else:
                    new = _splice(work, [((v0, v1, v2, v3), (e01, e12, e23)),
                                         (qv, qe)])
                    drop = e34
            if not _valid_walk(new[0]):
                continue
            work.replace({idx, j}, [work.new_ear(*new)], release_trivial=[drop])
            return "O8"
        if v2 in q_ends and q.length >= 3:
            # O10: long ear attached only at v2
            qv, qe = _oriented(q, v2)
            new = _splice(work, [((v0, v1, v2), (e01, e12)), (qv, qe)])
            small = work.new_ear((v2, v3, v4), (e23, e34))
            if not _valid_walk(new[0]):
                continue
            work.replace({idx, j}, [work.new_ear(*new), small])
            return "O10"

    # Every attachment is now a pendant 2-ear at {v1,v3} or only at v2.
    g = work.g
    two13 = [(j, work.ears[j]) for j, _ in attached
             if set(work.ears[j].endpoints) == {v1, v3}]
    if two13:
        j, q = two13[0]
        w = q.internal[0]
        qv, qe = _oriented(q, v1)                    # (v1, w, v3) edges
        wv2 = [eid for eid in g.edge_ids_between(w, v2) if eid in work.trivial]
        if wv2:
            # O4: reroute through the trivial edge {w, v2}
            new_v = (v0, v1, w, v2, v3, v4)
            new_e = (e01, qe[0], wv2[0], e23, e34)
            work.replace({idx, j}, [work.new_ear(new_v, new_e)],
                         consume_trivial=[wv2[0]], release_trivial=[e12, qe[1]])
            return "O4"
        # O5: an ear from v2 or w leading outside {w, v1, v2, v3}
        for x in (v2, w):
            for eid, y in g.incident(x):
                if eid in ear.edge_ids or eid in q.edge_ids:
                    continue
                if y in (w, v1, v2, v3):
                    continue
                if eid in work.trivial:
                    rv, re = (y, x), (eid,)
                    extra = None
                else:
                    jr = next((jj for jj, e in enumerate(work.ears)
                               if eid in e.edge_ids), None)
                    if jr is None or jr in (idx, j):
                        continue
                    r = work.ears[jr]
                    if r.closed or set(r.endpoints) != {x, y}:
                        continue
                    rv, re = _oriented(r, y)         # walk y .. x
                    extra = jr
                if x == v2:
                    parts = [(rv, re), ((v2, v1), (e12,)), (qv, qe),
                             ((v3, v4), (e34,))]
                    drops = [e01, e23]
                else:
                    parts = [(rv, re), ((w, v1), (qe[0],)),
                             ((v1, v2, v3, v4), (e12, e23, e34))]
                    drops = [e01, qe[1]]
                new_v, new_e = _splice(work, parts)
                if not _valid_walk(new_v):
                    continue
                removed = {idx, j} | ({extra} if extra is not None else set())
                work.replace(removed, [work.new_ear(new_v, new_e)],
                             consume_trivial=[eid] if extra is None else [],
                             release_trivial=drops)
                return "O5"
        return None

    two_v2 = [(j, work.ears[j]) for j, _ in attached
              if v2 in work.ears[j].endpoints]
    if two_v2:
        j, q = two_v2[0]
        w = q.internal[0]
        qe_wv2 = next(eid for eid in q.edge_ids
                      if set(g.endpoints(eid)) == {w, v2})
        other_q = next(eid for eid in q.edge_ids if eid != qe_wv2)
        for target in (v1, v3):
            e_tw = [eid for eid in g.edge_ids_between(w, target)
                    if eid in work.trivial]
            if not e_tw:
                continue
            # O6: 5-ear through the 2-ear middle adjacent to v1 (or v3)
            if target == v1:
                new_v = (v0, v1, w, v2, v3, v4)
                new_e = (e01, e_tw[0], qe_wv2, e23, e34)
                drop = [e12, other_q]
            else:
                new_v = (v0, v1, v2, w, v3, v4)
                new_e = (e01, e12, qe_wv2, e_tw[0], e34)
                drop = [e23, other_q]
            if not _valid_walk(new_v):
                continue
            work.replace({idx, j}, [work.new_ear(new_v, new_e)],
                         consume_trivial=[e_tw[0]], release_trivial=drop)
            return "O6"
        e13 = [eid for eid in g.edge_ids_between(v1, v3)
               if eid in work.trivial]
        if e13:
            # O7: 5-ear using the trivial edge {v1, v3}
            qv, qe = _oriented(q, v2)                # (v2, w, z)
            new_v = (v0, v1, v3, v2) + qv[1:]
            new_e = (e01, e13[0], e23) + qe
            if _valid_walk(new_v):
                work.replace({idx, j}, [work.new_ear(new_v, new_e)],
                             consume_trivial=[e13[0]], release_trivial=[e12, e34])
                return "O7"
    return None


def _fix_adjacency(work: _Work) -> Optional[str]:
    ed = work.freeze()
    g = work.g
    outer = {idx for idx in range(len(ed.ears)) if is_outer(ed, idx)}
    ear_of = work.ear_of()

    # O11: adjacent internals of two pendant 3-ears
    for eid in sorted(work.trivial):
        x, y = g.endpoints(eid)
        px, py = ear_of.get(x), ear_of.get(y)
        if px is None or py is None or px == py:
            continue
        if ed.ears[px].length == 3 and ed.ears[py].length == 3 \
                and ed.is_pendant_ear(px) and ed.is_pendant_ear(py):
            pxe, pye = work.ears[px], work.ears[py]
            far_x = _far_half(pxe, x)
            far_y = _far_half(pye, y)
            rev = tuple(reversed(far_x[0])), tuple(reversed(far_x[1]))
            new_v, new_e = _splice(work, [rev, ((x, y), (eid,)), far_y])
            near_x = next(e for e in pxe.edge_ids if e not in far_x[1])
            near_y = next(e for e in pye.edge_ids if e not in far_y[1])
            if not _valid_walk(new_v):
                continue
            work.replace({px, py}, [work.new_ear(new_v, new_e)],
                         consume_trivial=[eid], release_trivial=[near_x, near_y])
            return "O11"

    # O12: a 2-ear middle adjacent to the middles of two outer 4-ears
    middles = {}
    for idx in outer:
        if ed.ears[idx].length == 4:
            middles[ed.ears[idx].internal[1]] = idx
    for idx in outer:
        if ed.ears[idx].length != 2:
            continue
        w = ed.ears[idx].internal[0]
        hit = sorted({middles[u] for _, u in g.incident(w) if u in middles})
        if len(hit) >= 2:
            pa, pb = hit[0], hit[1]
            A, B = work.ears[pa], work.ears[pb]
            a0, a1, a2, a3, a4 = A.vertices
            b0, b1, b2, b3, b4 = B.vertices
            e_aw = min(g.edge_ids_between(a2, w))
            e_wb = min(e for e in g.edge_ids_between(w, b2) if e != e_aw)
            if not _valid_walk((a0, a1, a2, w, b2, b3, b4)):
                continue
            new6 = work.new_ear((a0, a1, a2, w, b2, b3, b4),
                                (A.edge_ids[0], A.edge_ids[1], e_aw, e_wb,
                                 B.edge_ids[2], B.edge_ids[3]))
            twoA = work.new_ear((a2, a3, a4), (A.edge_ids[2], A.edge_ids[3]))
            twoB = work.new_ear((b0, b1, b2), (B.edge_ids[0], B.edge_ids[1]))
            consumed = [e for e in (e_aw, e_wb) if e in work.trivial]
            released = [e for e in work.ears[idx].edge_ids
                        if e not in (e_aw, e_wb)]
            work.replace({pa, pb, idx}, [new6, twoA, twoB],
                         consume_trivial=consumed, release_trivial=released)
            return "O12"

    # O13: re-attach an outer ear along a violating adjacency
    mid4 = set(middles)
    for eid in sorted(work.trivial):
        for (x, y) in (g.endpoints(eid), tuple(reversed(g.endpoints(eid)))):
            px, py = ear_of.get(x), ear_of.get(y)
            if px is None or py is None or px == py:
                continue
            if px not in outer or py not in outer:
                continue
            if y in ed.ears[px].endpoints or x in ed.ears[py].endpoints:
                continue
            if x in mid4 and y in mid4:
                continue
            if ed.ears[py].length == 3:
                continue
            P = work.ears[px]
            if P.closed:
                continue
            pos = P.vertices.index(x)
            if pos == 1:
                drop_e = P.edge_ids[0]
                new_v = (y,) + P.vertices[1:]
                new_e = (eid,) + P.edge_ids[1:]
            elif pos == len(P.vertices) - 2:
                drop_e = P.edge_ids[-1]
                new_v = P.vertices[:-1] + (y,)
                new_e = P.edge_ids[:-1] + (eid,)
            else:
                continue
            if not _valid_walk(new_v) or new_v[0] == new_v[-1]:
                continue
            work.replace({px}, [work.new_ear(new_v, new_e)],
                         consume_trivial=[eid], release_trivial=[drop_e])
            return "O13"
    return None


def _far_half(ear: Ear, x: int) -> tuple:
    """Two-edge half of a 3-ear from internal vertex x away from its side."""
    vs = ear.vertices
    if vs[1] == x:
        return (x, vs[2], vs[3]), (ear.edge_ids[1], ear.edge_ids[2])
    return (x, vs[1], vs[0]), (ear.edge_ids[1], ear.edge_ids[0])


# ---------------------------------------------------------------------------
# Well-oriented decompositions


@dataclass
class WellOrientedEarDecomposition:
    """Decomposition plus a rooted orientation of pendant ears.

    The oriented edges form a branching; each component is an arborescence
    rooted at its vertex of minimum ear index.  ``entering[i]`` lists the
    (oriented ear, entry vertex) pairs whose final edge heads into an
    internal vertex of ear i.
    """

    ed: EarDecomposition
    oriented: frozenset            # ear indices
    orientation: dict              # edge id -> (tail, head)
    root_of: dict                  # vertex -> component root, oriented comps
    entering: dict                 # ear index -> list[(oriented idx, vertex)]
    pi: int
    primary_count: Optional[int] = None

    def h(self, idx: int) -> int:
        return len(self.entering.get(idx, []))

    def entered(self, idx: int) -> bool:
        return idx in self.entering and bool(self.entering[idx])


def orient_clean_forest(ed: EarDecomposition, chosen: Iterable[int]
                        ) -> WellOrientedEarDecomposition:
    """Orient the chosen pendant ears away from per-component roots.

    Roots minimize the ear index of their vertex (ties to the lowest vertex
    id).  Raises if the chosen ears are not pendant or do not form a forest.
    """
    chosen = sorted(set(chosen))
    g = ed.g
    for idx in chosen:
        if not ed.is_pendant_ear(idx):
            raise EarStructureError(f"chosen ear {idx} is not pendant")
    edge_pool = []
    for idx in chosen:
        edge_pool.extend(ed.ears[idx].edge_ids)
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    adj: dict = {}
    for eid in edge_pool:
        u, v = g.endpoints(eid)
        ru, rv = find(u), find(v)
        if ru == rv:
            raise EarStructureError(
                f"chosen ears contain a cycle through edge {eid}")
        parent[ru] = rv
        adj.setdefault(u, []).append((eid, v))
        adj.setdefault(v, []).append((eid, u))

    def ear_key(v):
        e = ed.ear_of(v)
        return (-1 if e is None else e, v)

    orientation = {}
    root_of = {}
    seen = set()
    for v in sorted(adj, key=ear_key):
        if v in seen:
            continue
        comp = [v]
        seen.add(v)
        stack = [v]
        while stack:
            x = stack.pop()
            for eid, y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.append(y)
                    stack.append(y)
        root = min(comp, key=ear_key)
        stack = [root]
        visited = {root}
        while stack:
            x = stack.pop()
            root_of[x] = root
            for eid, y in sorted(adj[x]):
                if y not in visited:
                    visited.add(y)
                    orientation[eid] = (x, y)
                    stack.append(y)

    entering: dict = {}
    for idx in chosen:
        ear = ed.ears[idx]
        heads = []
        for eid in ear.edge_ids:
            tail, head = orientation[eid]
            if head not in ear.internal:
                heads.append(head)
        if len(heads) != 1:
            raise EarStructureError(f"oriented ear {idx} is not a directed path")
        target = ed.ear_of(heads[0])
        if target is not None:
            entering.setdefault(target, []).append((idx, heads[0]))
    pi = sum(1 for idx in range(len(ed.ears))
             if not entering.get(idx))
    return WellOrientedEarDecomposition(
        ed=ed, oriented=frozenset(chosen), orientation=orientation,
        root_of=root_of, entering={k: sorted(v) for k, v in entering.items()},
        pi=pi)
