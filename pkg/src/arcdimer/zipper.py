"""Zippers, perturbation matrices and trace series.

A zipper is the set of lattice edges crossed by a dual staircase path from
a face containing ``z`` to the outer face through the flat top boundary.
Each crossed edge is directed from the left of the path to its right.
Putting a unipotent connection on the zipper edges perturbs the Kasteleyn
matrix by a matrix ``S`` supported on zipper vertices, and the traces
``T_n = tr((S K^{-1})^n)`` generate the moments of the arc statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import factorial
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import LatticeGraph, NodeClass, restrict_upper
from .linalg import det_ratio_series, sqrt_det_continuation


class ZipperError(ValueError):
    pass


MODEL_CONSTANT = {"folded": 2.0, "shifted": 1.0}


@dataclass
class Zipper:
    """Directed edges crossing a staircase path, ordered along the path.

    ``directed`` holds ``(tail, head)`` vertex pairs of the host graph with
    the tail on the left of the path.  ``faces`` are the lower-left corners
    (half-lattice units) of the faces visited; ``packets`` are runs of four
    consecutive edges forming a zig-zag, ``leftover`` the rest.
    """

    graph: LatticeGraph
    directed: list
    faces: list
    waypoints: list
    start: complex
    snap_offset: float
    packets: list = field(default_factory=list)
    leftover: list = field(default_factory=list)
    step_dirs: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.directed)

    def sign(self, w: int, b: int) -> int:
        """+1 if (w, b) is a zipper edge, -1 if (b, w) is, else 0."""
        return self._sgn.get((w, b), 0)

    def __post_init__(self) -> None:
        self._sgn = {}
        for t, h in self.directed:
            if self.graph.is_black[t]:
                self._sgn[(h, t)] = -1
            else:
                self._sgn[(t, h)] = 1

    def undirected_ids(self) -> np.ndarray:
        return np.array([self.graph.edge_id(t, h) for t, h in self.directed], dtype=np.int64)

    def white_black_pairs(self) -> list[tuple[int, int, int]]:
        """(w, b, sgn) for every zipper edge."""
        out = []
        for t, h in self.directed:
            if self.graph.is_black[t]:
                out.append((h, t, -1))
            else:
                out.append((t, h, 1))
        return out


def _face_exists(g: LatticeGraph, x: int, y: int) -> bool:
    idx = g.index
    return (x, y) in idx and (x + 1, y) in idx and (x, y + 1) in idx and (x + 1, y + 1) in idx


def _crossed_edge(x: int, y: int, d: tuple[int, int]) -> tuple[tuple[int, int], tuple[int, int]]:
    dx, dy = d
    if dy == 1:
        return (x, y + 1), (x + 1, y + 1)
    if dy == -1:
        return (x, y), (x + 1, y)
    if dx == 1:
        return (x + 1, y), (x + 1, y + 1)
    return (x, y), (x, y + 1)


def build_zipper(g: LatticeGraph, waypoints: Sequence[complex], max_steps: int = 10**6) -> Zipper:
    """Zipper of the polyline ``waypoints`` (real coordinates, slopes +-1).

    The first waypoint is z, snapped to a face whose corner opposite to the
    first direction is a lattice vertex.  Interior waypoints change the
    direction; the final segment is followed until the path leaves the
    graph, which must happen across a boundary edge.
    """
    if g.variant not in ("upper-1", "symmetric-r", "strict-upper-2"):
        raise ZipperError("zippers are built on Temperleyan lattice graphs")
    pts = [complex(p) for p in waypoints]
    if len(pts) < 2:
        raise ZipperError("need at least a start and an end point")
    h = g.eps * g.scale  # half-lattice unit in real length
    dirs = []
    lengths = []
    for a, b in zip(pts[:-1], pts[1:]):
        dx, dy = (b - a).real, (b - a).imag
        if abs(abs(dx) - abs(dy)) > 1e-9 * max(1.0, abs(dx)) or abs(dx) < 1e-12:
            raise ZipperError("path segments must have slope +1 or -1")
        dirs.append((1 if dx > 0 else -1, 1 if dy > 0 else -1))
        lengths.append(abs(dx) / h)
    # snap the start face: corner opposite to the first direction is even-even
    sx, sy = dirs[0]
    zx, zy = pts[0].real / h, pts[0].imag / h
    best = None
    for X in range(int(math.floor(zx)) - 3, int(math.floor(zx)) + 4):
        for Y in range(int(math.floor(zy)) - 3, int(math.floor(zy)) + 4):
            cx = X + (1 if sx < 0 else 0)
            cy = Y + (1 if sy < 0 else 0)
            if cx % 2 or cy % 2:
                continue
            dist = math.hypot(X + 0.5 - zx, Y + 0.5 - zy)
            if best is None or dist < best[0]:
                best = (dist, X, Y)
    _, x, y = best
    if not _face_exists(g, x, y):
        raise ZipperError("start point is not inside the domain")
    start = complex((x + 0.5) * h, (y + 0.5) * h)
    faces = [(x, y)]
    directed = []
    step_dirs = []
    seg_steps = [int(round(L)) for L in lengths]
    for k, d in enumerate(dirs):
        last = k == len(dirs) - 1
        n_pairs = seg_steps[k] if not last else max_steps
        done = False
        for _ in range(n_pairs):
            for step in ((0, d[1]), (d[0], 0)):
                a, b = _crossed_edge(x, y, step)
                ia, ib = g.index.get(a), g.index.get(b)
                if ia is None or ib is None:
                    raise ZipperError("path leaves the domain away from an edge")
                # left of direction (sx, sy) is the side with larger (-sy, sx) component
                nx, ny = -step[1], step[0]
                pa = a[0] * nx + a[1] * ny
                pb = b[0] * nx + b[1] * ny
                directed.append((ia, ib) if pa > pb else (ib, ia))
                step_dirs.append(step)
                x, y = x + step[0], y + step[1]
                if not _face_exists(g, x, y):
                    if not last:
                        raise ZipperError("path leaves the domain before its last segment")
                    done = True
                    break
                faces.append((x, y))
            if done:
                break
        if last and not done:
            raise ZipperError("path never reaches the boundary")
    z = Zipper(g, directed, faces, pts, start, abs(start - pts[0]), step_dirs=step_dirs)
    _packetize(z)
    return z


def _packetize(z: Zipper) -> None:
    g = z.graph
    chain_cls = []
    k = 0
    packets, leftover = [], []
    edges = z.directed
    while k < len(edges):
        grp = edges[k : k + 4]
        dirs = z.step_dirs[k : k + 4]
        ok = len(grp) == 4 and len({(abs(a), abs(b)) for a, b in dirs}) == 2
        ok = ok and dirs[0] == dirs[2] and dirs[1] == dirs[3]
        if ok:
            packets.append(list(range(k, k + 4)))
            k += 4
        else:
            leftover.append(k)
            k += 1
    z.packets = packets
    z.leftover = leftover
    del chain_cls


def packet_classes(z: Zipper, packet: Sequence[int]) -> list[str]:
    """Class labels of the vertex chain of a packet, in path order."""
    g = z.graph
    chain = []
    for k in packet:
        t, h = z.directed[k]
        for v in (t, h):
            if not chain or chain[-1] != v:
                if len(chain) >= 2 and chain[-2] == v:
                    continue
                chain.append(v)
    # order the chain as a path through shared vertices
    verts = []
    e = [set(z.directed[k]) for k in packet]
    shared = [next(iter(e[i] & e[i + 1])) for i in range(len(e) - 1)]
    first = next(iter(e[0] - {shared[0]}))
    last = next(iter(e[-1] - {shared[-1]}))
    verts = [first] + shared + [last]
    return [NodeClass(int(g.classes[v])).name for v in verts]


# ---------------------------------------------------------------------------
# sparse model matrices
# ---------------------------------------------------------------------------


def _zeta(g: LatticeGraph, w: int, b: int) -> complex:
    d = complex(*(g.coords[b] - g.coords[w]))
    return d / abs(d)


def kasteleyn_wb(g: LatticeGraph) -> sp.csc_matrix:
    """Discrete holomorphy matrix as a sparse |W| x |B| matrix."""
    rows = np.array([g.white_pos[int(w)] for w in g.edge_w])
    cols = np.array([g.black_pos[int(b)] for b in g.edge_b])
    d = (g.coords[g.edge_b] - g.coords[g.edge_w]).astype(float)
    vals = (d[:, 0] + 1j * d[:, 1]) / np.hypot(d[:, 0], d[:, 1])
    n = len(g.whites)
    if n != len(g.blacks):
        raise ZipperError("graph is not balanced")
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass
class ModelSystem:
    """Sparse W x B Kasteleyn matrix with the zipper perturbation S.

    The perturbed matrix is K + c * alpha * S, with c = 2 for the folded
    model and 1 for the shifted model.  Rows of S are indexed by
    ``zw`` (white positions) and columns by ``zb`` (black positions).
    """

    model: str
    K: sp.csc_matrix
    S: sp.csc_matrix
    zw: np.ndarray
    zb: np.ndarray
    white_nodes: list  # (graph label, vertex) per white position
    black_nodes: list
    eps: float
    _lu: object = None

    @property
    def c(self) -> float:
        return MODEL_CONSTANT[self.model]

    def lu(self):
        if self._lu is None:
            self._lu = spla.splu(self.K.tocsc())
        return self._lu

    def inverse_block(self) -> np.ndarray:
        """(K^{-1})[zb, zw] via sparse solves with |zw| right-hand sides."""
        n = self.K.shape[0]
        rhs = np.zeros((n, len(self.zw)), dtype=complex)
        rhs[self.zw, np.arange(len(self.zw))] = 1.0
        sol = self.lu().solve(rhs)
        return sol[self.zb, :]

    def compressed(self) -> np.ndarray:
        """A = S[zw, zb] @ K^{-1}[zb, zw]; t_n = tr(A^n)."""
        s = self.S[self.zw][:, self.zb].toarray()
        return s @ self.inverse_block()


def folded_system(g_r: LatticeGraph, zipper: Zipper) -> ModelSystem:
    """Gauged folded system on the symmetric graph.

    The zipper lives on the upper graph; the perturbation couples the
    mirror image of each zipper white vertex to the zipper black vertex,
    with the phase of the upper edge, the zipper sign, and a factor -1 for
    vertical-edge whites.
    """
    if g_r.variant != "symmetric-r":
        raise ZipperError("folded system needs the symmetric graph")
    gu = zipper.graph
    K = kasteleyn_wb(g_r)
    rows, cols, vals = [], [], []
    for w, b, s in zipper.white_black_pairs():
        xw, yw = gu.coords[w]
        xb, yb = gu.coords[b]
        if yw <= 0:
            raise ZipperError("zipper white vertex on the axis")
        wr = g_r.index[(int(xw), int(-yw))]
        br = g_r.index[(int(xb), int(yb))]
        sign = -1.0 if gu.classes[w] == NodeClass.W0 else 1.0
        rows.append(g_r.white_pos[wr])
        cols.append(g_r.black_pos[br])
        vals.append(_zeta(gu, w, b) * s * sign)
    n = K.shape[0]
    S = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    zw = np.array(sorted(set(rows)), dtype=np.int64)
    zb = np.array(sorted(set(cols)), dtype=np.int64)
    wn = [("r", int(v)) for v in g_r.whites]
    bn = [("r", int(v)) for v in g_r.blacks]
    return ModelSystem("folded", K, S, zw, zb, wn, bn, g_r.eps)


def shifted_system(g1: LatticeGraph, g2: LatticeGraph, zipper: Zipper) -> ModelSystem:
    """Block system diag(K1, K2) with the shifted zipper perturbation.

    With phi = I + (alpha/2) M, M = [[1, -1], [1, -1]], the parameter-2alpha
    matrix is K + alpha * S where S[(w,i),(b,j)] = zeta * sgn * M[i, j].
    """
    K1 = kasteleyn_wb(g1)
    K2 = kasteleyn_wb(g2)
    n1, n2 = K1.shape[0], K2.shape[0]
    K = sp.block_diag([K1, K2], format="csc")
    gu = zipper.graph
    M = np.array([[1.0, -1.0], [1.0, -1.0]])
    rows, cols, vals = [], [], []

    def pos(copy, v, white):
        x, y = gu.coords[v]
        gg = g1 if copy == 1 else g2
        k = gg.index.get((int(x), int(y)))
        if k is None:
            raise ZipperError("zipper vertex missing from the lower copy graph")
        p = gg.white_pos[k] if white else gg.black_pos[k]
        return p + (0 if copy == 1 else n1)

    for w, b, s in zipper.white_black_pairs():
        z = _zeta(gu, w, b) * s
        for i in (1, 2):
            for j in (1, 2):
                rows.append(pos(i, w, True))
                cols.append(pos(j, b, False))
                vals.append(z * M[i - 1, j - 1])
    n = n1 + n2
    S = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    zw = np.array(sorted(set(rows)), dtype=np.int64)
    zb = np.array(sorted(set(cols)), dtype=np.int64)
    wn = [("1", int(v)) for v in g1.whites] + [("2", int(v)) for v in g2.whites]
    bn = [("1", int(v)) for v in g1.blacks] + [("2", int(v)) for v in g2.blacks]
    return ModelSystem("shifted", K, S, zw, zb, wn, bn, g1.eps)


def model_system(model: str, g_r: LatticeGraph, zipper: Zipper) -> ModelSystem:
    if model == "folded":
        return folded_system(g_r, zipper)
    if model == "shifted":
        return shifted_system(restrict_upper(g_r, False), restrict_upper(g_r, True), zipper)
    raise ZipperError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# trace series and moments
# ---------------------------------------------------------------------------


@dataclass
class TraceSeries:
    """T_n = tr((S K^{-1})^n) for the full skew matrices (twice the W-block trace)."""

    T: np.ndarray
    eps: float
    model: str
    spectral_radius: float

    @property
    def c(self) -> float:
        return MODEL_CONSTANT[self.model]

    def normalized(self) -> np.ndarray:
        """T_n scaled to be comparable with the continuum c_n.

        Folded traces converge to c_n; shifted traces to 2^n c_n.
        """
        n = np.arange(1, len(self.T) + 1)
        return self.T.real * (self.c / 2.0) ** n

    def log_ratio(self, alpha: float) -> complex:
        k = np.arange(1, len(self.T) + 1)
        return complex(0.5 * np.sum((-1.0) ** (k - 1) * (self.c * alpha) ** k * self.T / k))


def trace_series(system: ModelSystem, n_max: int) -> TraceSeries:
    if n_max < 1:
        raise ZipperError("n_max must be at least 1")
    a = system.compressed()
    rs = det_ratio_series(a, n_max, system.c)
    imag = np.abs(rs.traces.imag) / (1 + np.abs(rs.traces))
    if np.any(imag > 1e-6):
        raise ZipperError(f"trace series is not real (max relative imaginary part {imag.max():.2e})")
    return TraceSeries(2.0 * rs.traces, system.eps, system.model, rs.spectral_radius)


def bell_polynomial(m: int, x: Sequence[complex]) -> complex:
    """Complete Bell polynomial B_m(x_1, ..., x_m) by the standard recurrence."""
    b = [1.0 + 0j]
    for n in range(m):
        s = 0j
        for k in range(n + 1):
            s += math.comb(n, k) * b[n - k] * x[k]
        b.append(s)
    return complex(b[m])


def cumulant_inputs(T: Sequence[complex], c: float) -> list[complex]:
    """x_k = (1/2) (-1)^(k-1) c^k (k-1)! T_k so that log f = sum x_k a^k / k!."""
    return [0.5 * (-1) ** (k - 1) * c**k * factorial(k - 1) * T[k - 1] for k in range(1, len(T) + 1)]


def binomial_moment(x: Sequence[complex], n: int, sigma: int) -> float:
    """E[binom((N - O)/2, n) O^sigma] from the cumulant inputs x."""
    m = 2 * n + sigma
    if m > len(x):
        raise ZipperError(f"need {m} traces, have {len(x)}")
    return float(((-1) ** (n + sigma) * bell_polynomial(m, x) / factorial(m)).real)


def moments_from_x(x: Sequence[complex]) -> dict:
    """E[o], E[n] and, with four inputs, var(n)."""
    eo = binomial_moment(x, 0, 1)
    er = binomial_moment(x, 1, 0)
    out = {"E_o": eo, "E_n": eo + 2 * er}
    if len(x) >= 4:
        er2 = binomial_moment(x, 2, 0)  # E[C(R,2)]
        ero = binomial_moment(x, 1, 1)  # E[R o]
        en2 = 4 * (2 * er2 + er) + 4 * ero + eo
        out["var_n"] = en2 - out["E_n"] ** 2
    return out


def moments_from_traces(ts: TraceSeries, n: int | None = None, sigma: int | None = None):
    """Finite-mesh moments from a trace series.

    With ``n`` and ``sigma`` returns E[binom((N-O)/2, n) O^sigma];
    otherwise a dict with E[o], E[n] and var(n) when available.
    """
    x = cumulant_inputs(ts.T, ts.c)
    if n is not None:
        return binomial_moment(x, n, sigma or 0)
    return moments_from_x(x)


def generating_rhs(system: ModelSystem, alphas: Iterable[float]) -> list[complex]:
    """Pf K_{2a} / Pf K = det(K + c a S) / det K on the W x B block."""
    a = system.compressed()
    eye = np.eye(a.shape[0])
    return [complex(np.linalg.det(eye + system.c * al * a)) for al in alphas]


def generating_rhs_full(system: ModelSystem, alphas: Iterable[float]) -> list[complex]:
    """det(I + c a S K^{-1})^(1/2) with the full skew matrices, branch by continuity."""
    n = system.K.shape[0]
    K = system.K.toarray()
    S = system.S.toarray()
    full_k = np.block([[np.zeros((n, n)), K], [-K.T, np.zeros((n, n))]])
    full_s = np.block([[np.zeros((n, n)), S], [-S.T, np.zeros((n, n))]])
    a = full_s @ np.linalg.inv(full_k)
    return [sqrt_det_continuation(a, system.c, al) for al in alphas]
