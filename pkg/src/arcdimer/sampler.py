"""Exact uniform samplers for dimer covers of Temperleyan graphs.

``sample_wilson`` draws a uniform spanning tree of the primal lattice with
Wilson's algorithm and maps it to a dimer cover through the Temperley
bijection:

* every non-root lattice vertex is matched to the edge leading towards the
  root in the tree;
* the unused edges form a spanning tree of the dual graph rooted at the
  outer face, and every inner face is matched to the edge leading towards
  the outer face in that dual tree.

For the strict upper graph the whole axis row is removed; contracting the
removed row to a single root vertex gives a planar graph whose Temperley
double is exactly the strict upper graph, so the same sampler applies.

``sample_determinantal`` visits white vertices in a fixed order and picks a
partner with probability K(w, b) K^{-1}(b, w), updating the inverse after
each choice.  It works for any matchable graph with an invertible
Kasteleyn matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .enumeration import Matching
from .lattice import LatticeGraph, NodeClass
from .linalg import delete_pair_update
from .zipper import kasteleyn_wb


class SamplerError(RuntimeError):
    pass


def sample_seeds(seed: int, start: int, count: int) -> np.ndarray:
    """Per-sample seeds from a counter-based split of the master seed."""
    out = np.empty(count, dtype=np.int64)
    for k in range(count):
        ss = np.random.SeedSequence(seed, spawn_key=(start + k,))
        out[k] = int(ss.generate_state(1, dtype=np.uint32)[0])
    return out


@dataclass
class TemperleyData:
    """Primal and dual incidence arrays for the Temperley bijection."""

    graph: LatticeGraph
    n_primal: int  # the root has index n_primal
    primal_node: np.ndarray  # primal index -> graph node
    adj_ptr: np.ndarray
    adj_v: np.ndarray  # neighbouring primal vertex (root = n_primal)
    adj_w: np.ndarray  # graph node of the edge midpoint
    face_nodes: np.ndarray  # B0 graph nodes
    w_faces: np.ndarray  # per graph node (whites only): two face slots, -1 outer, -2 none
    face_ptr: np.ndarray
    face_w: np.ndarray  # white neighbours of each face


def temperley_data(g: LatticeGraph) -> TemperleyData:
    """Build the primal graph (with root) and face incidences of ``g``."""
    if g.variant not in ("symmetric-r", "upper-1", "strict-upper-2"):
        raise SamplerError("Wilson sampling needs a Temperleyan graph variant")
    glued = g.variant == "strict-upper-2"
    if not glued and g.b0 is None:
        raise SamplerError("graph has no removed root vertex")
    b1 = [k for k in range(g.n_vertices) if g.classes[k] == NodeClass.B1]
    pidx = {k: i for i, k in enumerate(b1)}
    root = len(b1)
    b0 = tuple(int(t) for t in g.b0) if g.b0 is not None else None

    def primal_of(x: int, y: int) -> int:
        k = g.index.get((x, y))
        if k is not None and g.classes[k] == NodeClass.B1:
            return pidx[k]
        if (x, y) == b0 or (glued and y == 0):
            return root
        raise SamplerError(f"edge endpoint ({x},{y}) missing: graph is not Temperleyan")

    adj: list[list[tuple[int, int]]] = [[] for _ in range(root + 1)]
    w_faces = np.full((g.n_vertices, 2), -2, dtype=np.int64)
    face_nodes = np.array([k for k in range(g.n_vertices) if g.classes[k] == NodeClass.B0], dtype=np.int64)
    for w in g.whites:
        x, y = (int(t) for t in g.coords[w])
        if g.classes[w] == NodeClass.W0:
            ends = ((x, y - 1), (x, y + 1))
            sides = ((x - 1, y), (x + 1, y))
        else:
            ends = ((x - 1, y), (x + 1, y))
            sides = ((x, y - 1), (x, y + 1))
        p, q = (primal_of(*e) for e in ends)
        if p == q:
            raise SamplerError("degenerate primal edge")
        adj[p].append((q, int(w)))
        adj[q].append((p, int(w)))
        for s, (fx, fy) in enumerate(sides):
            f = g.index.get((fx, fy))
            w_faces[w, s] = f if f is not None else -1
    ptr = np.zeros(root + 2, dtype=np.int64)
    for i, lst in enumerate(adj):
        ptr[i + 1] = ptr[i] + len(lst)
    av = np.array([v for lst in adj for v, _ in lst], dtype=np.int64)
    aw = np.array([w for lst in adj for _, w in lst], dtype=np.int64)
    fptr = np.zeros(len(face_nodes) + 1, dtype=np.int64)
    fw = []
    for i, f in enumerate(face_nodes):
        ws = [int(u) for u in g.neighbors[f]]
        fw.extend(ws)
        fptr[i + 1] = fptr[i] + len(ws)
    return TemperleyData(
        g, root, np.array(b1, dtype=np.int64), ptr, av, aw, face_nodes, w_faces, fptr, np.array(fw, dtype=np.int64)
    )


@nb.njit(cache=True)
def _wilson_cover(seed, n_primal, adj_ptr, adj_v, adj_w, primal_node, face_nodes, w_faces, face_ptr, face_w, n_nodes):
    np.random.seed(seed)
    root = n_primal
    in_tree = np.zeros(n_primal + 1, dtype=np.bool_)
    in_tree[root] = True
    nxt = np.full(n_primal + 1, -1, dtype=np.int64)
    nxt_w = np.full(n_primal + 1, -1, dtype=np.int64)
    for start in range(n_primal):
        u = start
        while not in_tree[u]:
            deg = adj_ptr[u + 1] - adj_ptr[u]
            k = adj_ptr[u] + np.random.randint(deg)
            nxt[u] = adj_v[k]
            nxt_w[u] = adj_w[k]
            u = adj_v[k]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    mate = np.full(n_nodes, -1, dtype=np.int64)
    tree_w = np.zeros(n_nodes, dtype=np.bool_)
    for v in range(n_primal):
        node = primal_node[v]
        w = nxt_w[v]
        mate[node] = w
        mate[w] = node
        tree_w[w] = True
    # dual tree: breadth-first search from the outer face through unused edges
    n_faces = face_nodes.shape[0]
    face_pos = np.full(n_nodes, -1, dtype=np.int64)
    for i in range(n_faces):
        face_pos[face_nodes[i]] = i
    seen = np.zeros(n_faces, dtype=np.bool_)
    queue = np.empty(n_faces, dtype=np.int64)
    head = 0
    tail = 0
    for w in range(n_nodes):
        if w_faces[w, 0] == -2 or tree_w[w]:
            continue
        a = w_faces[w, 0]
        b = w_faces[w, 1]
        f = -1
        if a == -1 and b >= 0:
            f = b
        elif b == -1 and a >= 0:
            f = a
        if f >= 0:
            i = face_pos[f]
            if not seen[i]:
                seen[i] = True
                mate[f] = w
                mate[w] = f
                queue[tail] = i
                tail += 1
    while head < tail:
        i = queue[head]
        head += 1
        f = face_nodes[i]
        for k in range(face_ptr[i], face_ptr[i + 1]):
            w = face_w[k]
            if tree_w[w] or mate[w] >= 0:
                continue
            other = w_faces[w, 0] if w_faces[w, 1] == f else w_faces[w, 1]
            if other < 0:
                continue
            j = face_pos[other]
            if not seen[j]:
                seen[j] = True
                mate[other] = w
                mate[w] = other
                queue[tail] = j
                tail += 1
    return mate


def wilson_mate(td: TemperleyData, seed: int) -> np.ndarray:
    """One uniform dimer cover as a mate array (``mate[v]`` is v's partner)."""
    mate = _wilson_cover(
        np.int64(seed), td.n_primal, td.adj_ptr, td.adj_v, td.adj_w, td.primal_node,
        td.face_nodes, td.w_faces, td.face_ptr, td.face_w, td.graph.n_vertices,
    )
    return mate


def check_mate(g: LatticeGraph, mate: np.ndarray) -> None:
    """Raise unless ``mate`` is a perfect matching of ``g``."""
    n = g.n_vertices
    if mate.shape != (n,) or np.any(mate < 0):
        raise SamplerError("some vertex is unmatched")
    if np.any(mate[mate] != np.arange(n)):
        raise SamplerError("mate array is not an involution")
    for v in range(n):
        if int(mate[v]) not in g.neighbors[v]:
            raise SamplerError("matched pair is not an edge")


def mate_to_matching(g: LatticeGraph, mate: np.ndarray) -> Matching:
    edges = tuple(sorted((min(v, int(mate[v])), max(v, int(mate[v]))) for v in range(g.n_vertices) if v < mate[v]))
    return Matching(edges, g)


def sample_wilson(g: LatticeGraph, rng: np.random.Generator | int, td: TemperleyData | None = None) -> Matching:
    """Uniform dimer cover by Wilson's algorithm and the Temperley bijection."""
    td = td or temperley_data(g)
    seed = rng if isinstance(rng, (int, np.integer)) else int(rng.integers(2**31))
    mate = wilson_mate(td, int(seed))
    check_mate(g, mate)
    return mate_to_matching(g, mate)


@dataclass
class DeterminantalSampler:
    """Sequential sampler driven by the inverse Kasteleyn matrix."""

    graph: LatticeGraph
    K: np.ndarray = field(init=False)
    Kinv: np.ndarray = field(init=False)
    refreshes: int = 0

    def __post_init__(self) -> None:
        self.K = kasteleyn_wb(self.graph).toarray()
        self.Kinv = np.linalg.inv(self.K)

    def sample(self, rng: np.random.Generator, tol: float = 1e-6) -> Matching:
        g = self.graph
        K = self.K
        kinv = self.Kinv.copy()
        rows = list(range(K.shape[0]))  # white positions still present
        cols = list(range(K.shape[1]))  # black positions still present
        edges = []
        for wpos in range(K.shape[0]):
            i = rows.index(wpos)
            w = int(g.whites[wpos])
            cands, probs = [], []
            for b in g.neighbors[w]:
                bpos = g.black_pos[b]
                if bpos in cols:
                    j = cols.index(bpos)
                    cands.append((j, b))
                    probs.append((K[wpos, bpos] * kinv[j, i]).real)
            p = np.array(probs)
            if abs(p.sum() - 1) > tol or p.min(initial=0) < -tol:
                # numerical drift: recompute the inverse of the remaining block
                self.refreshes += 1
                kinv = np.linalg.inv(K[np.ix_(rows, cols)])
                p = np.array([(K[wpos, g.black_pos[b]] * kinv[j, i]).real for j, b in cands])
                if abs(p.sum() - 1) > tol:
                    raise SamplerError("conditional probabilities do not sum to one")
            p = np.clip(p, 0, None)
            p /= p.sum()
            k = int(rng.choice(len(cands), p=p))
            j, b = cands[k]
            edges.append((min(w, b), max(w, b)))
            kinv = delete_pair_update(kinv, j, i)
            del rows[i]
            del cols[j]
        return Matching(tuple(sorted(edges)), g)


def sample_determinantal(g: LatticeGraph, rng: np.random.Generator, sampler: DeterminantalSampler | None = None) -> Matching:
    return (sampler or DeterminantalSampler(g)).sample(rng)


def edge_marginals(g: LatticeGraph) -> dict:
    """Exact edge probabilities K(w,b) K^{-1}(b,w) keyed by (w, b)."""
    K = kasteleyn_wb(g).toarray()
    kinv = np.linalg.inv(K)
    out = {}
    for e in range(len(g.edge_w)):
        w, b = int(g.edge_w[e]), int(g.edge_b[e])
        out[(w, b)] = float((K[g.white_pos[w], g.black_pos[b]] * kinv[g.black_pos[b], g.white_pos[w]]).real)
    return out
