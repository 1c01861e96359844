"""Folding, superposition and arc statistics.

A dimer cover of the symmetric graph folds onto the upper graph into loops,
doubled edges and arcs ending on the axis.  Two independent covers of the
upper graphs (with and without the axis row) superimpose into the same kind
of configuration.  For a zipper at z the arc statistics are

* ``n``: arcs crossing the zipper an odd number of times (arcs separating z
  from the far boundary),
* ``r``: those of them whose white end lies left of the black end,
* ``l = n - r`` and ``o = l - r``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Iterable

import numba as nb
import numpy as np

from .enumeration import EnumerationCapExceeded, LoopsArcsConfig, config_from_multigraph, enumerate_matchings
from .lattice import LatticeGraph, axis_vertices, reflect_index, restrict_upper
from .sampler import _wilson_cover, sample_seeds, temperley_data
from .zipper import Zipper


class ArcError(ValueError):
    pass


def _add(mult: dict, a: int, b: int) -> None:
    e = (a, b) if a < b else (b, a)
    mult[e] = mult.get(e, 0) + 1


def fold_matching(g_r: LatticeGraph, g1: LatticeGraph, edges: Iterable[tuple[int, int]]) -> dict:
    """Edge multiset on the upper graph from a cover of the symmetric graph.

    Edges with a vertex strictly below the axis are reflected.  Axis-axis
    edges appear once.
    """
    mult: dict = {}
    idx = g1.index
    for u, v in edges:
        (xu, yu), (xv, yv) = g_r.coords[u], g_r.coords[v]
        a = idx[(int(xu), abs(int(yu)))]
        b = idx[(int(xv), abs(int(yv)))]
        _add(mult, a, b)
    return mult


def superimpose(g1: LatticeGraph, g2: LatticeGraph, m1, m2) -> dict:
    """Edge multiset on g1 from covers of g1 and of g2 (g2 placed by coordinates)."""
    mult: dict = {}
    for u, v in m1:
        _add(mult, int(u), int(v))
    idx = g1.index
    for u, v in m2:
        a = idx[tuple(int(t) for t in g2.coords[u])]
        b = idx[tuple(int(t) for t in g2.coords[v])]
        _add(mult, a, b)
    return mult


@dataclass(frozen=True)
class ArcStatistics:
    n: int
    r: int
    l: int
    n_arcs: int
    n_loops: int

    @property
    def o(self) -> int:
        return self.l - self.r

    def weight(self, alpha: float) -> float:
        """(1 - alpha^2)^r (1 - o alpha)."""
        return (1 - alpha * alpha) ** self.r * (1 - self.o * alpha)


def arc_stats(cfg: LoopsArcsConfig, zipper: Zipper) -> ArcStatistics:
    g = zipper.graph
    zset = set(int(e) for e in zipper.undirected_ids())
    n = r = 0
    for path in cfg.arcs:
        cnt = 0
        for a, b in zip(path[:-1], path[1:]):
            if g.edge_id(a, b) in zset:
                cnt += 1
        if cnt % 2 == 0:
            continue
        n += 1
        bl, wh = path[0], path[-1]
        if g.is_black[wh]:
            bl, wh = wh, bl
        if g.coords[wh][0] < g.coords[bl][0]:
            r += 1
    return ArcStatistics(n, r, n - r, len(cfg.arcs), len(cfg.loops))


def config_of(mult: dict, g1: LatticeGraph) -> LoopsArcsConfig:
    return config_from_multigraph(g1, axis_vertices(g1), mult)


@dataclass
class ExactDistribution:
    """Arc statistics of every configuration, with multiplicities."""

    model: str
    counts: dict  # ArcStatistics -> number of covers (or cover pairs)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def expectation(self, fn) -> float:
        return sum(fn(s) * c for s, c in self.counts.items()) / self.total

    def generating(self, alpha: float) -> float:
        return self.expectation(lambda s: s.weight(alpha))

    def moments(self) -> dict:
        en = self.expectation(lambda s: s.n)
        en2 = self.expectation(lambda s: s.n * s.n)
        return {
            "E_o": self.expectation(lambda s: s.o),
            "E_n": en,
            "var_n": en2 - en * en,
            "P_o_valid": self.expectation(lambda s: 1.0 if s.o in (0, 1) else 0.0),
            "P_parity": self.expectation(lambda s: 1.0 if s.o == s.n % 2 else 0.0),
        }


def exact_distribution(model: str, g_r: LatticeGraph, zipper: Zipper, cap: int = 10**6, vertex_cap: int = 64) -> ExactDistribution:
    """Enumerate all covers and tabulate the arc statistics."""
    g1 = zipper.graph
    counts: dict = {}
    if model == "folded":
        ms = enumerate_matchings(g_r, vertex_cap=vertex_cap, matching_cap=cap)
        for m in ms:
            st = arc_stats(config_of(fold_matching(g_r, g1, m.edges), g1), zipper)
            counts[st] = counts.get(st, 0) + 1
    elif model == "shifted":
        g2 = restrict_upper(g_r, True)
        m1s = enumerate_matchings(g1, vertex_cap=vertex_cap, matching_cap=cap)
        m2s = enumerate_matchings(g2, vertex_cap=vertex_cap, matching_cap=cap)
        if len(m1s) * len(m2s) > cap:
            raise ArcError("too many cover pairs to enumerate")
        for a in m1s:
            for b in m2s:
                st = arc_stats(config_of(superimpose(g1, g2, a.edges, b.edges), g1), zipper)
                counts[st] = counts.get(st, 0) + 1
    else:
        raise ArcError(f"unknown model {model!r}")
    return ExactDistribution(model, counts)


# ---------------------------------------------------------------------------
# oriented configurations and height increments
# ---------------------------------------------------------------------------


def _orient(cfg: LoopsArcsConfig, g: LatticeGraph, origin: dict) -> LoopsArcsConfig:
    """Orient loops and arcs from the origin of their edges.

    ``origin[(a, b)]`` (a < b) is +1 for an edge oriented black to white and
    -1 for white to black.  Loops are reordered to follow their orientation.
    """

    def forward(a: int, b: int) -> bool:
        o = origin.get((min(a, b), max(a, b)), 1)
        black_first = bool(g.is_black[a])
        return (o > 0) == black_first

    loops = []
    for c in cfg.loops:
        loops.append(list(c) if forward(c[0], c[1]) else [c[0]] + list(reversed(c[1:])))
    orient = []
    for path in cfg.arcs:
        orient.append(1 if len(path) < 2 or forward(path[0], path[1]) else -1)
    return LoopsArcsConfig(loops, cfg.doubled, cfg.arcs, g, orient)


def fold(g_r: LatticeGraph, g1: LatticeGraph, edges: Iterable[tuple[int, int]]) -> LoopsArcsConfig:
    """Fold a cover of the symmetric graph onto the upper graph.

    Upper-half dimers are oriented black to white and reflected lower-half
    dimers white to black.
    """
    edges = list(edges)
    origin = {}
    for u, v in edges:
        (xu, yu), (xv, yv) = g_r.coords[u], g_r.coords[v]
        a = g1.index[(int(xu), abs(int(yu)))]
        b = g1.index[(int(xv), abs(int(yv)))]
        origin[(min(a, b), max(a, b))] = -1 if min(yu, yv) < 0 else 1
    cfg = config_of(fold_matching(g_r, g1, edges), g1)
    return _orient(cfg, g1, origin)


def superimpose_config(g1: LatticeGraph, g2: LatticeGraph, m1, m2) -> LoopsArcsConfig:
    """Superimpose covers of the two upper graphs (m1 black to white, m2 reversed)."""
    origin = {}
    for u, v in m1:
        origin[(min(u, v), max(u, v))] = 1
    for u, v in m2:
        a = g1.index[tuple(int(t) for t in g2.coords[u])]
        b = g1.index[tuple(int(t) for t in g2.coords[v])]
        origin[(min(a, b), max(a, b))] = -1
    cfg = config_of(superimpose(g1, g2, m1, m2), g1)
    return _orient(cfg, g1, origin)


def oriented_edges(cfg: LoopsArcsConfig) -> set:
    """Directed edges of all loops and arcs (doubled edges contribute none)."""
    out = set()
    for c in cfg.loops:
        for a, b in zip(c, c[1:] + c[:1]):
            out.add((a, b))
    orient = cfg.arc_orientation or [1] * len(cfg.arcs)
    for path, o in zip(cfg.arcs, orient):
        p = path if o > 0 else path[::-1]
        for a, b in zip(p[:-1], p[1:]):
            out.add((a, b))
    return out


def _faces(g: LatticeGraph) -> list[tuple[int, int]]:
    idx = g.index
    return [
        (x, y)
        for (x, y) in idx
        if (x + 1, y) in idx and (x, y + 1) in idx and (x + 1, y + 1) in idx
    ]


def height_increments(cfg: LoopsArcsConfig) -> dict:
    """Height on the faces of the base graph, zero on the first face.

    Crossing a directed loop or arc edge from its left to its right adds one.
    Raises ``ArcError`` when the increments are not curl free.
    """
    g = cfg.base
    if g is None:
        raise ArcError("configuration has no base graph")
    directed = oriented_edges(cfg)
    faces = _faces(g)
    fset = set(faces)
    height: dict = {}

    def step(f, d):
        # crossing from face f to its neighbour in direction d, return (f2, increment)
        x, y = f
        if d == (1, 0):
            p, q, f2 = (x + 1, y), (x + 1, y + 1), (x + 1, y)
        elif d == (-1, 0):
            p, q, f2 = (x, y + 1), (x, y), (x - 1, y)
        elif d == (0, 1):
            p, q, f2 = (x + 1, y + 1), (x, y + 1), (x, y + 1)
        else:
            p, q, f2 = (x, y), (x + 1, y), (x, y - 1)
        # p -> q has face f on its left
        a, b = g.index[p], g.index[q]
        inc = 1 if (a, b) in directed else (-1 if (b, a) in directed else 0)
        return f2, inc

    dirs = ((1, 0), (-1, 0), (0, 1), (0, -1))
    for start in faces:
        if start in height:
            continue
        height[start] = 0
        stack = [start]
        while stack:
            f = stack.pop()
            for d in dirs:
                f2, inc = step(f, d)
                if f2 not in fset:
                    continue
                h = height[f] + inc
                if f2 in height:
                    if height[f2] != h:
                        raise ArcError("height increments are not curl free")
                else:
                    height[f2] = h
                    stack.append(f2)
    return height


# ---------------------------------------------------------------------------
# fast statistics for Monte Carlo
# ---------------------------------------------------------------------------


@nb.njit(cache=True)
def _edge_hit(keys, n1, a, b):
    k = min(a, b) * n1 + max(a, b)
    i = np.searchsorted(keys, k)
    return i < keys.shape[0] and keys[i] == k


@nb.njit(cache=True)
def _folded_stats(mate, refl, to1, axis_r, starts, keys, n1, x1):
    n = 0
    r = 0
    for s in range(starts.shape[0]):
        cur = starts[s]
        cnt = 0
        while True:
            nxt = mate[cur]
            if _edge_hit(keys, n1, to1[cur], to1[nxt]):
                cnt += 1
            if axis_r[nxt]:
                break
            cur = refl[nxt]
        if cnt % 2 == 1:
            n += 1
            if x1[to1[nxt]] < x1[to1[starts[s]]]:
                r += 1
    return n, r


@nb.njit(cache=True)
def _shifted_stats(mate1, mate2, map12, map21, axis1, starts, keys, n1, x1):
    n = 0
    r = 0
    for s in range(starts.shape[0]):
        cur = starts[s]
        cnt = 0
        while True:
            nxt = mate1[cur]
            if _edge_hit(keys, n1, cur, nxt):
                cnt += 1
            if axis1[nxt]:
                break
            back = map21[mate2[map12[nxt]]]
            if _edge_hit(keys, n1, nxt, back):
                cnt += 1
            cur = back
        if cnt % 2 == 1:
            n += 1
            if x1[nxt] < x1[starts[s]]:
                r += 1
    return n, r


@nb.njit(cache=True, nogil=True)
def _folded_batch(seeds, td, st):
    out = np.empty((seeds.shape[0], 2), dtype=np.int64)
    for i in range(seeds.shape[0]):
        mate = _wilson_cover(seeds[i], td[0], td[1], td[2], td[3], td[4], td[5], td[6], td[7], td[8], td[9])
        n, r = _folded_stats(mate, st[0], st[1], st[2], st[3], st[4], st[5], st[6])
        out[i, 0] = n
        out[i, 1] = r
    return out


@nb.njit(cache=True, nogil=True)
def _shifted_batch(seeds, td1, td2, st):
    out = np.empty((seeds.shape[0], 2), dtype=np.int64)
    for i in range(seeds.shape[0]):
        m1 = _wilson_cover(seeds[i], td1[0], td1[1], td1[2], td1[3], td1[4], td1[5], td1[6], td1[7], td1[8], td1[9])
        m2 = _wilson_cover(seeds[i] ^ 0x5DEECE66, td2[0], td2[1], td2[2], td2[3], td2[4], td2[5], td2[6], td2[7], td2[8], td2[9])
        n, r = _shifted_stats(m1, m2, st[0], st[1], st[2], st[3], st[4], st[5], st[6])
        out[i, 0] = n
        out[i, 1] = r
    return out


def _td_tuple(td):
    return (
        np.int64(td.n_primal), td.adj_ptr, td.adj_v, td.adj_w, td.primal_node,
        td.face_nodes, td.w_faces, td.face_ptr, td.face_w, np.int64(td.graph.n_vertices),
    )


def _zipper_keys(zipper: Zipper) -> np.ndarray:
    n1 = zipper.graph.n_vertices
    return np.unique(np.array([min(a, b) * n1 + max(a, b) for a, b in zipper.directed], dtype=np.int64))


class ArcSampler:
    """Batch sampler of (n, r) at a zipper for either model."""

    def __init__(self, model: str, g_r: LatticeGraph, zipper: Zipper):
        self.model = model
        g1 = zipper.graph
        self.g1 = g1
        n1 = np.int64(g1.n_vertices)
        keys = _zipper_keys(zipper)
        x1 = g1.coords[:, 0].astype(np.int64).copy()
        if model == "folded":
            self.td = _td_tuple(temperley_data(g_r))
            to1 = np.array([g1.index[(int(x), abs(int(y)))] for x, y in g_r.coords], dtype=np.int64)
            axis_r = g_r.coords[:, 1] == 0
            starts = np.array([k for k in np.flatnonzero(axis_r) if g_r.is_black[k]], dtype=np.int64)
            self.st = (reflect_index(g_r), to1, axis_r, starts, keys, n1, x1)
        elif model == "shifted":
            g2 = restrict_upper(g_r, True)
            self.td = _td_tuple(temperley_data(g1))
            self.td2 = _td_tuple(temperley_data(g2))
            map12 = np.array([g2.index.get((int(x), int(y)), -1) for x, y in g1.coords], dtype=np.int64)
            map21 = np.array([g1.index[(int(x), int(y))] for x, y in g2.coords], dtype=np.int64)
            axis1 = g1.coords[:, 1] == 0
            starts = np.array([k for k in np.flatnonzero(axis1) if g1.is_black[k]], dtype=np.int64)
            self.st = (map12, map21, axis1, starts, keys, n1, x1)
        else:
            raise ArcError(f"unknown model {model!r}")

    def run(self, seeds: np.ndarray) -> np.ndarray:
        seeds = np.asarray(seeds, dtype=np.int64)
        if self.model == "folded":
            return _folded_batch(seeds, self.td, self.st)
        return _shifted_batch(seeds, self.td, self.td2, self.st)


# ---------------------------------------------------------------------------
# moment estimation
# ---------------------------------------------------------------------------


MOMENT_KEYS = ("E_o", "E_n", "var_n", "B_1_0", "B_0_1", "B_1_1", "B_2_0")


def _moment_fn(m: np.ndarray) -> np.ndarray:
    """Moments from the feature means [o, n, n^2, R, Ro, C(R,2)] (rows)."""
    eo, en, en2, er, ero, er2 = (m[..., k] for k in range(6))
    return np.stack([eo, en, en2 - en * en, er, eo, ero, er2], axis=-1)


def _features(n: np.ndarray, r: np.ndarray) -> np.ndarray:
    n = n.astype(float)
    o = n - 2 * r
    R = (n - o) / 2
    return np.stack([o, n, n * n, R, R * o, R * (R - 1) / 2], axis=-1)


@dataclass
class MomentReport:
    """Moment estimates with standard errors and provenance.

    Binomial moments E[binom(R, k) o^s] with R = (n - o)/2 appear under the
    keys ``B_k_s``.
    """

    model: str
    eps: float
    provenance: str
    n_samples: int
    estimates: dict
    stderr: dict
    samples: np.ndarray | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = {
            "model": self.model,
            "eps": self.eps,
            "provenance": self.provenance,
            "n_samples": self.n_samples,
            "estimates": self.estimates,
            "stderr": self.stderr,
            "meta": self.meta,
        }
        return json.dumps(d, indent=2, sort_keys=True)

    def rows(self) -> list[tuple[int, int, int, int]]:
        """Per-sample (n, o, r, l) rows."""
        if self.samples is None:
            return []
        return [(int(n), int(n - 2 * r), int(r), int(n - r)) for n, r in self.samples]


def jackknife(features: np.ndarray, fn) -> tuple[np.ndarray, np.ndarray]:
    """Delete-one jackknife estimate and standard error of fn(mean features)."""
    N = features.shape[0]
    total = features.sum(axis=0)
    est = fn(total / N)
    if N < 2:
        return est, np.zeros_like(est)
    loo = fn((total[None, :] - features) / (N - 1))
    mean_loo = loo.mean(axis=0)
    se = np.sqrt((N - 1) / N * ((loo - mean_loo) ** 2).sum(axis=0))
    return est, se


def report_from_samples(model: str, eps: float, samples: np.ndarray, meta: dict | None = None) -> MomentReport:
    samples = np.asarray(samples, dtype=np.int64).reshape(-1, 2)
    est, se = jackknife(_features(samples[:, 0], samples[:, 1]), _moment_fn)
    return MomentReport(
        model, eps, "monte-carlo", len(samples),
        {k: float(v) for k, v in zip(MOMENT_KEYS, est)},
        {k: float(v) for k, v in zip(MOMENT_KEYS, se)},
        samples, meta or {},
    )


def report_from_distribution(dist: ExactDistribution, eps: float) -> MomentReport:
    def R(s):
        return (s.n - s.o) // 2

    est = dict(dist.moments())
    est.pop("P_o_valid")
    est.pop("P_parity")
    est["B_1_0"] = dist.expectation(lambda s: R(s))
    est["B_0_1"] = dist.expectation(lambda s: s.o)
    est["B_1_1"] = dist.expectation(lambda s: R(s) * s.o)
    est["B_2_0"] = dist.expectation(lambda s: comb(R(s), 2))
    return MomentReport(dist.model, eps, "exact-enumeration", dist.total, est, {k: 0.0 for k in est})


def estimate_moments(
    model: str,
    g_r: LatticeGraph,
    zipper: Zipper,
    n_samples: int,
    seed: int = 0,
    threads: int = 1,
    exact_vertex_cap: int = 36,
    chunk: int = 256,
) -> MomentReport:
    """Monte Carlo moments of the arc statistics with jackknife errors.

    Graphs with at most ``exact_vertex_cap`` vertices are enumerated instead
    and the report carries exact values.
    """
    if n_samples < 1:
        raise ArcError("need at least one sample")
    if g_r.n_vertices <= exact_vertex_cap:
        try:
            return report_from_distribution(exact_distribution(model, g_r, zipper), g_r.eps)
        except (EnumerationCapExceeded, ArcError):
            pass
    sampler = ArcSampler(model, g_r, zipper)
    starts = list(range(0, n_samples, chunk))

    def work(s0: int) -> np.ndarray:
        return sampler.run(sample_seeds(seed, s0, min(chunk, n_samples - s0)))

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, starts))
    else:
        parts = [work(s0) for s0 in starts]
    samples = np.concatenate(parts)
    meta = {"seed": seed, "snap_offset": zipper.snap_offset, "zipper_edges": len(zipper)}
    return report_from_samples(model, g_r.eps, samples, meta)
