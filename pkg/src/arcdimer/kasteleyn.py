"""Kasteleyn phases, SL(2) connections and the folded graph.

The folded graph of a planar bipartite graph ``G`` with a boundary set
``boundary`` has the boundary vertices once and every other vertex twice,
as ``(u, 1)`` and ``(u, 2)``.  Its Kasteleyn matrix carries the phases of
``G`` times the entries of the connection matrices (bulk edges) or of the
boundary vectors (edges into the boundary).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .lattice import LatticeGraph


class KasteleynError(ValueError):
    pass


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------


@dataclass
class PhaseAssignment:
    """Unit-modulus phase per undirected edge, stored as xi[w, b]."""

    graph: LatticeGraph
    values: np.ndarray
    kind: str

    def __call__(self, u: int, v: int) -> complex:
        return complex(self.values[self.graph.edge_id(u, v)])

    def face_ratios(self) -> np.ndarray:
        """Alternating product around each bounded face (should be -1)."""
        g = self.graph
        out = []
        for f in g.faces():
            e = [self.values[g.edge_id(f[k], f[(k + 1) % 4])] for k in range(4)]
            out.append(e[0] * e[2] / (e[1] * e[3]))
        return np.array(out, dtype=complex)

    def is_kasteleyn(self, tol: float = 1e-12) -> bool:
        r = self.face_ratios()
        return bool(np.all(np.abs(r + 1.0) <= tol))


def complex_phases(g: LatticeGraph) -> PhaseAssignment:
    """Phases of discrete holomorphy: zeta[w, b] = (b - w) / |b - w|."""
    d = g.positions()[g.edge_b] - g.positions()[g.edge_w]
    return PhaseAssignment(g, d / np.abs(d), "complex")


def gauge_transform(ph: PhaseAssignment, eps: np.ndarray | Callable[[int], complex]) -> PhaseAssignment:
    """Multiply the phase of every edge {w, b} by eps(w) * eps(b)."""
    g = ph.graph
    if callable(eps):
        eps = np.array([eps(k) for k in range(g.n_vertices)], dtype=complex)
    eps = np.asarray(eps, dtype=complex)
    if eps.shape != (g.n_vertices,):
        raise KasteleynError("gauge must give one value per vertex")
    if np.any(np.abs(np.abs(eps) - 1.0) > 1e-12):
        raise KasteleynError("gauge values must have unit modulus")
    vals = ph.values * eps[g.edge_w] * eps[g.edge_b]
    kind = "real" if np.all(np.abs(vals.imag) < 1e-14) else "complex"
    return PhaseAssignment(g, vals, kind)


def standard_gauge(g: LatticeGraph) -> np.ndarray:
    """eps(u) = (-i)^[u on an odd row] * (-1)^[u white]."""
    odd = (g.coords[:, 1] % 2) == 1
    return np.where(odd, -1j, 1.0) * np.where(g.is_black, 1.0, -1.0)


def _spanning_tree_edges(g: LatticeGraph) -> set[int]:
    n = g.n_vertices
    seen = np.zeros(n, dtype=bool)
    tree = set()
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v in g.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    tree.add(g.edge_id(u, v))
                    queue.append(v)
    return tree


def real_phases(g: LatticeGraph, boundary: Sequence[int] | None = None) -> PhaseAssignment:
    """Real Kasteleyn signs, alternating along an ordered boundary path.

    Tree edges start at +1; the remaining edges are fixed one face at a
    time, always on a face with a single undetermined edge.  If
    ``boundary`` (a path of consecutive outer vertices, in the order used
    for the Pfaffian) is given, a vertex gauge then makes the boundary
    edges satisfy xi[w, b] = -1 exactly when w comes after b.
    """
    faces = g.faces()
    face_edges = [[g.edge_id(f[k], f[(k + 1) % 4]) for k in range(4)] for f in faces]
    vals = np.zeros(g.n_edges)
    known = np.zeros(g.n_edges, dtype=bool)
    for e in _spanning_tree_edges(g):
        vals[e] = 1.0
        known[e] = True
    pending = set(range(len(faces)))
    progress = True
    while pending and progress:
        progress = False
        for fi in sorted(pending):
            es = face_edges[fi]
            unknown = [e for e in es if not known[e]]
            if len(unknown) > 1:
                continue
            if unknown:
                e = unknown[0]
                vals[e] = 1.0
                known[e] = True
                r = vals[es[0]] * vals[es[2]] / (vals[es[1]] * vals[es[3]])
                if r != -1.0:
                    vals[e] = -1.0
            pending.discard(fi)
            progress = True
    if pending or not known.all():
        raise KasteleynError("could not complete a Kasteleyn sign assignment")
    ph = PhaseAssignment(g, vals.astype(complex), "real")
    if not ph.is_kasteleyn():
        raise KasteleynError("face condition violated; embedding data inconsistent")
    if boundary:
        ph = _alternate_boundary(ph, list(boundary))
    return ph


def _alternate_boundary(ph: PhaseAssignment, boundary: list[int]) -> PhaseAssignment:
    g = ph.graph
    rank = {v: k for k, v in enumerate(boundary)}
    eps = np.ones(g.n_vertices)
    for a, b in zip(boundary[:-1], boundary[1:]):
        if b not in g.neighbors[a]:
            raise KasteleynError("boundary path is not a sequence of adjacent vertices")
        w, bl = (a, b) if not g.is_black[a] else (b, a)
        want = -1.0 if rank[w] > rank[bl] else 1.0
        cur = ph(w, bl).real * eps[a]
        eps[b] = want / cur
    return gauge_transform(ph, eps)


def boundary_alternates(ph: PhaseAssignment, boundary: Sequence[int]) -> bool:
    rank = {v: k for k, v in enumerate(boundary)}
    g = ph.graph
    for a, b in zip(boundary[:-1], boundary[1:]):
        w, bl = (a, b) if not g.is_black[a] else (b, a)
        want = -1.0 if rank[w] > rank[bl] else 1.0
        if abs(ph(w, bl) - want) > 1e-12:
            return False
    return True


# ---------------------------------------------------------------------------
# connections
# ---------------------------------------------------------------------------

_I2 = np.eye(2, dtype=complex)


@dataclass
class Connection:
    """2x2 matrices on directed bulk edges and 2-vectors on boundary edges.

    Unset bulk edges default to the identity when ``identity_default`` is
    true; unset boundary edges use ``default_psi`` when it is given.
    """

    bulk: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    identity_default: bool = False
    default_psi: np.ndarray | None = None

    def set_edge(self, u: int, v: int, mat) -> None:
        m = np.asarray(mat, dtype=complex).reshape(2, 2)
        self.bulk[(u, v)] = m
        self.bulk[(v, u)] = np.linalg.inv(m)

    def set_boundary(self, u: int, x: int, vec) -> None:
        """Vector psi on the edge from bulk vertex ``u`` to boundary vertex ``x``."""
        self.boundary[(u, x)] = np.asarray(vec, dtype=complex).reshape(2)

    def phi(self, u: int, v: int) -> np.ndarray:
        m = self.bulk.get((u, v))
        if m is None:
            if self.identity_default:
                return _I2
            raise KasteleynError(f"missing connection on edge {u}->{v}")
        return m

    def psi(self, u: int, x: int) -> np.ndarray:
        vec = self.boundary.get((u, x))
        if vec is None:
            if self.default_psi is not None:
                return np.asarray(self.default_psi, dtype=complex)
            raise KasteleynError(f"missing boundary vector on edge {u}-{x}")
        return vec

    def check(self, tol: float = 1e-12) -> float:
        """Largest violation of det = 1 and phi[v,u] phi[u,v] = I."""
        worst = 0.0
        for (u, v), m in self.bulk.items():
            worst = max(worst, abs(np.linalg.det(m) - 1.0))
            back = self.bulk.get((v, u))
            if back is None:
                raise KasteleynError("connection stored in one direction only")
            worst = max(worst, float(np.abs(back @ m - _I2).max()))
        if worst > tol:
            raise KasteleynError(f"connection is not SL2 / inverse-consistent ({worst:.2e})")
        return worst


def random_sl2(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Bounded random SL2(C) matrix; one column rescaled to force det = 1."""
    while True:
        m = (rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2))) * scale
        d = np.linalg.det(m)
        if abs(d) > 0.25 * scale * scale:
            break
    m[:, 0] /= d
    return m


def random_connection(
    g: LatticeGraph, boundary: Iterable[int], rng: np.random.Generator
) -> Connection:
    bset = set(boundary)
    conn = Connection()
    for w, b in zip(g.edge_w, g.edge_b):
        w, b = int(w), int(b)
        if w in bset and b in bset:
            continue
        if w in bset or b in bset:
            u, x = (b, w) if w in bset else (w, b)
            vec = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
            conn.set_boundary(u, x, vec)
        else:
            conn.set_edge(w, b, random_sl2(rng))
    return conn


# ---------------------------------------------------------------------------
# folded graph and matrices
# ---------------------------------------------------------------------------


@dataclass
class SkewMatrix:
    """Dense skew-symmetric matrix with labelled rows/columns."""

    data: np.ndarray
    labels: list

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise KasteleynError("skew matrix must be square")
        up = np.triu(a, 1)
        self.data = up - up.T
        self.position = {lab: k for k, lab in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, key):
        return self.data[key]

    def triplets(self) -> str:
        """``row,col,re,im`` lines for the upper triangle nonzeros."""
        rows = []
        r, c = np.nonzero(np.triu(self.data, 1))
        for i, j in zip(r, c):
            v = self.data[i, j]
            rows.append(f"{i},{j},{v.real!r},{v.imag!r}")
        return "\n".join(rows) + ("\n" if rows else "")


@dataclass
class FoldedGraph:
    """Two copies of ``base`` glued along ``boundary``.

    Vertices are labelled ``(x, 0)`` for boundary vertices and ``(u, 1)`` /
    ``(u, 2)`` for the copies of bulk vertices.  ``order`` is the vertex
    order used for Pfaffians: boundary vertices in the given (clockwise)
    order, then whites with copies adjacent, then blacks likewise.
    """

    base: LatticeGraph
    boundary: tuple[int, ...]
    order: list = field(init=False)
    edges: list = field(init=False)

    def __post_init__(self) -> None:
        g = self.base
        bset = set(self.boundary)
        if len(bset) != len(self.boundary):
            raise KasteleynError("repeated boundary vertex")
        nb = sum(1 for x in self.boundary if g.is_black[x])
        if 2 * nb != len(self.boundary):
            raise KasteleynError("boundary must contain as many black as white vertices")
        order = [(x, 0) for x in self.boundary]
        for colour in (False, True):
            for u in range(g.n_vertices):
                if bool(g.is_black[u]) == colour and u not in bset:
                    order += [(u, 1), (u, 2)]
        self.order = order
        self.position = {lab: k for k, lab in enumerate(order)}
        self.bset = bset
        edges = []  # (white label, black label)
        for w, b in zip(g.edge_w, g.edge_b):
            w, b = int(w), int(b)
            wl = [(w, 0)] if w in bset else [(w, 1), (w, 2)]
            bl = [(b, 0)] if b in bset else [(b, 1), (b, 2)]
            for x in wl:
                for y in bl:
                    edges.append((x, y))
        self.edges = edges

    @property
    def n_vertices(self) -> int:
        return len(self.order)

    def project(self, label) -> int:
        return label[0]


def build_folded_graph(g: LatticeGraph, boundary: Sequence[int]) -> FoldedGraph:
    return FoldedGraph(g, tuple(int(x) for x in boundary))


def edge_weight(fg: FoldedGraph, conn: Connection, x, y) -> complex:
    """nu on the folded edge {x, y} with x white and y black."""
    (u, i), (v, j) = x, y
    if i and j:
        return complex(conn.phi(u, v)[i - 1, j - 1])
    if i:
        return complex(conn.psi(u, v)[i - 1])
    if j:
        return complex(conn.psi(v, u)[j - 1])
    return 1.0


def assemble_K(fg: FoldedGraph, conn: Connection, phases: PhaseAssignment) -> SkewMatrix:
    """Kasteleyn matrix K[x, y] = xi[p(x), p(y)] * nu[x, y] of the folded graph."""
    n = fg.n_vertices
    a = np.zeros((n, n), dtype=complex)
    for x, y in fg.edges:
        val = phases(x[0], y[0]) * edge_weight(fg, conn, x, y)
        px, py = fg.position[x], fg.position[y]
        a[px, py] = val
        a[py, px] = -val
    return SkewMatrix(a, list(fg.order))


# ---------------------------------------------------------------------------
# model connections
# ---------------------------------------------------------------------------


def zipper_connection(alpha: float, model: str, directed: Iterable[tuple[int, int]]) -> Connection:
    """Connection carried by the zipper edges (tail -> head pairs).

    ``folded``: phi = [[1, alpha], [0, 1]], psi = (1, 1).
    ``shifted``: phi = [[1 + alpha/2, -alpha/2], [alpha/2, 1 - alpha/2]], psi = (1, 0).
    """
    if model == "folded":
        mat = np.array([[1.0, alpha], [0.0, 1.0]], dtype=complex)
        psi = np.array([1.0, 1.0], dtype=complex)
    elif model == "shifted":
        mat = np.array([[1 + alpha / 2, -alpha / 2], [alpha / 2, 1 - alpha / 2]], dtype=complex)
        psi = np.array([1.0, 0.0], dtype=complex)
    else:
        raise KasteleynError(f"unknown model {model!r}")
    conn = Connection(identity_default=True, default_psi=psi)
    for u, v in directed:
        conn.set_edge(int(u), int(v), mat)
    return conn


def assemble_model_matrices(
    fg: FoldedGraph,
    directed: Sequence[tuple[int, int]],
    alpha: float,
    model: str,
    phases: PhaseAssignment | None = None,
    gauge: np.ndarray | None = None,
) -> tuple[SkewMatrix, SkewMatrix, SkewMatrix]:
    """Return (K, K_{2 alpha}, S) on the folded graph of the upper graph.

    With the zipper connection, K_{2 alpha} = K + c * alpha * S where c = 2
    for the folded model and c = 1 for the shifted model.  ``gauge`` (one
    value per folded vertex, in ``fg.order``) multiplies rows and columns,
    which turns K into the plain discrete holomorphy operator of the
    unfolded symmetric graph in the folded case.
    """
    if not 0 <= alpha < 1:
        raise KasteleynError("alpha must lie in [0, 1)")
    if phases is None:
        phases = complex_phases(fg.base)
    k0 = assemble_K(fg, zipper_connection(0.0, model, directed), phases).data
    k1 = assemble_K(fg, zipper_connection(2 * alpha, model, directed), phases).data
    # both connections are affine in alpha, so one evaluation at alpha = 1 gives S
    unit = assemble_K(fg, zipper_connection(2.0, model, directed), phases).data
    s = (unit - k0) / (2.0 if model == "folded" else 1.0)
    mats = [k0, k1, s]
    if gauge is not None:
        gvec = np.asarray(gauge, dtype=complex)
        mats = [gvec[:, None] * m * gvec[None, :] for m in mats]
    k0, k1, s = (SkewMatrix(m, list(fg.order)) for m in mats)
    return k0, k1, s
