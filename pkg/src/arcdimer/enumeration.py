"""Exhaustive oracles on small graphs.

Perfect matchings are enumerated by recursive elimination of the most
constrained vertex.  Folded-graph matchings project to configurations of
loops, doubled edges and boundary-to-boundary arcs on the base graph, which
is what the loop/arc expansion of the folded Pfaffian sums over.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kasteleyn import Connection, FoldedGraph
from .lattice import LatticeGraph
from .linalg import crossing_parity


class EnumerationCapExceeded(RuntimeError):
    pass


DEFAULT_VERTEX_CAP = 36
DEFAULT_MATCHING_CAP = 10**6


@dataclass(frozen=True)
class Matching:
    """Perfect matching as a sorted tuple of vertex pairs (labels of the host)."""

    edges: tuple
    host: object = field(compare=False, repr=False, default=None)

    def mate(self) -> dict:
        out = {}
        for a, b in self.edges:
            out[a] = b
            out[b] = a
        return out


def _match_recursive(adj: list[list[int]], cap: int) -> list[list[tuple[int, int]]]:
    n = len(adj)
    free = np.ones(n, dtype=bool)
    out: list[list[tuple[int, int]]] = []
    current: list[tuple[int, int]] = []

    def rec(remaining: int) -> None:
        if remaining == 0:
            out.append(list(current))
            if len(out) > cap:
                raise EnumerationCapExceeded(f"more than {cap} matchings")
            return
        best, best_opts = -1, None
        for v in range(n):
            if free[v]:
                opts = [u for u in adj[v] if free[u]]
                if best_opts is None or len(opts) < len(best_opts):
                    best, best_opts = v, opts
                    if len(opts) <= 1:
                        break
        if not best_opts:
            return
        free[best] = False
        for u in best_opts:
            free[u] = False
            current.append((min(best, u), max(best, u)))
            rec(remaining - 2)
            current.pop()
            free[u] = True
        free[best] = True

    if n % 2 == 0:
        rec(n)
    return out


def enumerate_matchings(
    graph, vertex_cap: int = DEFAULT_VERTEX_CAP, matching_cap: int = DEFAULT_MATCHING_CAP
) -> list[Matching]:
    """All perfect matchings of a ``LatticeGraph`` or ``FoldedGraph``.

    Matchings of a lattice graph use vertex indices; matchings of a folded
    graph use its ``(vertex, copy)`` labels.
    """
    if isinstance(graph, FoldedGraph):
        labels = list(graph.order)
        pos = graph.position
        adj: list[list[int]] = [[] for _ in labels]
        for x, y in graph.edges:
            adj[pos[x]].append(pos[y])
            adj[pos[y]].append(pos[x])
    else:
        labels = list(range(graph.n_vertices))
        adj = [list(nb) for nb in graph.neighbors]
    if len(labels) > vertex_cap:
        raise EnumerationCapExceeded(f"{len(labels)} vertices exceed the cap {vertex_cap}")
    raw = _match_recursive(adj, matching_cap)
    out = []
    for m in raw:
        edges = tuple(sorted((labels[a], labels[b]) for a, b in m))
        out.append(Matching(edges, graph))
    out.sort(key=lambda mm: mm.edges)
    return out


def count_matchings(graph, **kw) -> int:
    return len(enumerate_matchings(graph, **kw))


# ---------------------------------------------------------------------------
# loops and arcs
# ---------------------------------------------------------------------------


@dataclass
class LoopsArcsConfig:
    """Loops, doubled edges and arcs on a base graph.

    ``arcs`` are vertex paths listed from the black endpoint to the white
    endpoint.  ``loops`` are cyclic vertex sequences of length at least 4.
    ``arc_orientation`` (optional) is +1 when the arc is traversed from its
    black to its white endpoint by the orientation rule of its origin.
    """

    loops: list
    doubled: list
    arcs: list
    base: LatticeGraph | None = None
    arc_orientation: list | None = None

    def key(self) -> tuple:
        lp = tuple(sorted(_canonical_cycle(c) for c in self.loops))
        return (lp, tuple(sorted(self.doubled)), tuple(sorted(tuple(a) for a in self.arcs)))

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def edge_multiplicity(self) -> dict:
        mult: dict = {}

        def add(a, b, k=1):
            e = (min(a, b), max(a, b))
            mult[e] = mult.get(e, 0) + k

        for c in self.loops:
            for a, b in zip(c, c[1:] + c[:1]):
                add(a, b)
        for a, b in self.doubled:
            add(a, b, 2)
        for p in self.arcs:
            for a, b in zip(p[:-1], p[1:]):
                add(a, b)
        return mult


def _canonical_cycle(c: Sequence[int]) -> tuple:
    c = list(c)
    k = c.index(min(c))
    fwd = c[k:] + c[:k]
    bwd = [fwd[0]] + fwd[1:][::-1]
    return tuple(min(fwd, bwd))


def config_from_multigraph(
    g: LatticeGraph, boundary: Iterable[int], mult: dict
) -> LoopsArcsConfig:
    """Decompose an edge multiset (bulk degree 2, boundary degree 1)."""
    bset = set(boundary)
    inc: dict = {}
    doubled = []
    for (a, b), k in mult.items():
        if k == 2:
            w, bl = (a, b) if not g.is_black[a] else (b, a)
            doubled.append((w, bl))
            continue
        for _ in range(k):
            inc.setdefault(a, []).append(b)
            inc.setdefault(b, []).append(a)
    used = set()
    arcs = []
    # black endpoints first; a second pass picks up arcs joining two whites,
    # which occur when the boundary has several components
    starts = [x for x in sorted(bset) if g.is_black[x]] + [x for x in sorted(bset) if not g.is_black[x]]
    for x in starts:
        if x in used or x not in inc:
            continue
        path = [x]
        used.add(x)
        prev, cur = None, x
        while True:
            nxt = [y for y in inc[cur] if y != prev] if prev is not None else list(inc[cur])
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            path.append(cur)
            used.add(cur)
            if cur in bset:
                break
        arcs.append(path)
    loops = []
    for v in sorted(inc):
        if v in used:
            continue
        cyc = [v]
        used.add(v)
        prev, cur = None, v
        while True:
            nb = inc[cur]
            nxt = nb[1] if (prev is not None and nb[0] == prev) else nb[0]
            if nxt == v:
                break
            prev, cur = cur, nxt
            cyc.append(cur)
            used.add(cur)
        loops.append(cyc)
    doubled.sort()
    return LoopsArcsConfig(loops, doubled, arcs, g)


def project(m: Matching, fg: FoldedGraph) -> LoopsArcsConfig:
    """Projection of a folded-graph matching to loops / doubled edges / arcs."""
    mult: dict = {}
    for x, y in m.edges:
        a, b = x[0], y[0]
        e = (min(a, b), max(a, b))
        mult[e] = mult.get(e, 0) + 1
    return config_from_multigraph(fg.base, fg.boundary, mult)


def enumerate_configurations(g: LatticeGraph, boundary: Sequence[int]) -> list[LoopsArcsConfig]:
    """All loop/arc configurations, enumerated directly as edge multisets.

    Each bulk vertex has degree two (a doubled edge counts twice), each
    boundary vertex degree one.
    """
    bset = set(boundary)
    need = np.array([1 if v in bset else 2 for v in range(g.n_vertices)])
    edges = sorted((min(int(w), int(b)), max(int(w), int(b))) for w, b in zip(g.edge_w, g.edge_b))
    cap = [1 if (a in bset or b in bset) else 2 for a, b in edges]
    # remaining capacity of undecided edges at each vertex, for pruning
    room = np.zeros(g.n_vertices, dtype=int)
    for (a, b), c in zip(edges, cap):
        room[a] += c
        room[b] += c
    out = []
    chosen: dict = {}

    def rec(k: int) -> None:
        if k == len(edges):
            if not need.any():
                out.append(config_from_multigraph(g, bset, dict(chosen)))
            return
        a, b = edges[k]
        c = cap[k]
        room[a] -= c
        room[b] -= c
        for mlt in range(min(c, need[a], need[b]), -1, -1):
            need[a] -= mlt
            need[b] -= mlt
            if need[a] <= room[a] and need[b] <= room[b]:
                if mlt:
                    chosen[(a, b)] = mlt
                rec(k + 1)
                chosen.pop((a, b), None)
            need[a] += mlt
            need[b] += mlt
        room[a] += c
        room[b] += c

    rec(0)
    out.sort(key=lambda c: c.key())
    return out


def configurations_from_matchings(fg: FoldedGraph, matchings: Iterable[Matching]) -> list[LoopsArcsConfig]:
    seen = {}
    for m in matchings:
        cfg = project(m, fg)
        seen.setdefault(cfg.key(), cfg)
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# loop/arc expansion of the folded Pfaffian
# ---------------------------------------------------------------------------


def _path_monodromy(conn: Connection, path: Sequence[int]) -> np.ndarray:
    out = np.eye(2, dtype=complex)
    for a, b in zip(path[:-1], path[1:]):
        out = out @ conn.phi(a, b)
    return out


def config_weight(cfg: LoopsArcsConfig, conn: Connection) -> complex:
    """prod over loops tr(phi_C) times prod over arcs psi_w^T phi_A psi_b."""
    val = 1.0 + 0j
    for c in cfg.loops:
        val *= np.trace(_path_monodromy(conn, list(c) + [c[0]]))
    for p in cfg.arcs:
        if len(p) == 2:
            continue
        # p runs from the black endpoint to the white one; phi_A is ordered
        # from the white end towards the black end
        rev = p[::-1]
        w_end, b_end = rev[0], rev[-1]
        bulk = rev[1:-1]
        mono = _path_monodromy(conn, bulk)
        val *= conn.psi(bulk[0], w_end) @ mono @ conn.psi(bulk[-1], b_end)
    return complex(val)


def kenyon_rhs(configs: Iterable[LoopsArcsConfig], conn: Connection) -> complex:
    return complex(sum(config_weight(c, conn) for c in configs))


# ---------------------------------------------------------------------------
# crossing signs
# ---------------------------------------------------------------------------


def crossing_sign(m: Matching, order: Sequence) -> int:
    """(-1)^(number of chord crossings) with vertices placed in ``order``."""
    pos = {lab: k for k, lab in enumerate(order)}
    pairs = [(pos[a], pos[b]) for a, b in m.edges]
    return -1 if crossing_parity(pairs) else 1


def lemma_sign(m: Matching, fg: FoldedGraph, doubled_convention: str = "corrected") -> int:
    """Crossing sign predicted from the loop/arc decomposition and copy indices.

    Loops contribute (-1)^(1 + sum of copy indices on alternate edges), arcs
    (-1)^(sum of copy indices) times -1 when the black endpoint comes after
    the white one.  Doubled edges contribute -1 when both dimers stay in
    their copy ("corrected") or (-1)^(i_e) ("literal").
    """
    g = fg.base
    cfg = project(m, fg)
    mate = m.mate()
    pos = fg.position
    sign = 1

    def copy_pair(u: int, v: int) -> tuple[int, int]:
        # the dimer of m between copies of u and v; u, v bulk vertices
        for i in (1, 2):
            y = mate[(u, i)]
            if y[0] == v:
                return i, y[1]
        raise AssertionError("edge not present in matching")

    for w, b in cfg.doubled:
        i_w, j_b = copy_pair(w, b)
        straight = i_w == j_b
        if doubled_convention == "literal":
            sign *= 1 if straight else -1  # i_e = 2 straight, 1 crossed
        else:
            sign *= -1 if straight else 1
    for c in cfg.loops:
        # rotate to start at a white vertex, alternate edges white -> black
        k = next(t for t, v in enumerate(c) if not g.is_black[v])
        cyc = list(c[k:]) + list(c[:k])
        tot = 1
        for t in range(0, len(cyc), 2):
            i, j = copy_pair(cyc[t], cyc[t + 1])
            tot += i + j
        sign *= -1 if tot % 2 else 1
    for p in cfg.arcs:
        if len(p) == 2:
            continue
        b_a, w_a = p[0], p[-1]
        inner = p[1:-1]
        tot = 0
        for t in range(0, len(inner), 2):
            i, j = copy_pair(inner[t], inner[t + 1])
            tot += i + j
        if pos[(b_a, 0)] > pos[(w_a, 0)]:
            tot += 1
        sign *= -1 if tot % 2 else 1
    return sign


def sign_lemma_check(m: Matching, fg: FoldedGraph) -> bool:
    return lemma_sign(m, fg) == crossing_sign(m, fg.order)
