"""Traversing arcs on the doubled rectangle (a cylinder of circumference 2n).

The base graph is ``[0, n] x [1, m]`` with boundary the two vertical sides.
Gluing two copies along the boundary gives the cylinder Z/2nZ x [1, m].
Superimposing the two layers of a uniform dimer cover produces loops,
doubled edges and arcs; ``N`` counts the arcs joining the two sides.

With the diagonal connection diag(a, 1/a) on rightward horizontal edges,
a^n = rho, the Pfaffian ratio Pf K_a / Pf K equals E[Y^N] with
Y = (rho + 1/rho)/2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .enumeration import _match_recursive, config_from_multigraph
from .kasteleyn import Connection, FoldedGraph, assemble_K, complex_phases
from .lattice import LatticeGraph, lattice_graph
from .linalg import pfaffian


class CylinderError(ValueError):
    pass


@dataclass
class CylinderModel:
    """Base rectangle, its two boundary sides and the folded (doubled) graph."""

    n: int
    m: int
    base: LatticeGraph
    left: tuple
    right: tuple
    folded: FoldedGraph

    @property
    def boundary(self) -> tuple:
        return self.left + self.right


def cylinder_model(n: int, m: int) -> CylinderModel:
    if n < 2 or m < 1:
        raise CylinderError("need n >= 2 and m >= 1")
    g = lattice_graph((x, y) for x in range(n + 1) for y in range(1, m + 1))
    left = tuple(g.index[(0, y)] for y in range(1, m + 1))
    # clockwise order around the rectangle: up the left side, down the right
    right = tuple(g.index[(n, y)] for y in range(m, 0, -1))
    fg = FoldedGraph(g, left + right)
    for side in (left, right):
        cols = [bool(g.is_black[v]) for v in sorted(side, key=lambda v: g.coords[v][1])]
        if any(a == b for a, b in zip(cols, cols[1:])):
            raise CylinderError("boundary colours do not alternate")
    return CylinderModel(n, m, g, left, right, fg)


def rho_from_y(Y: complex) -> complex:
    """A root of rho + 1/rho = 2 Y (the one with |rho| >= 1)."""
    Y = complex(Y)
    r = Y + cmath.sqrt(Y * Y - 1)
    return r if abs(r) >= 1 else 1 / r


def cylinder_connection(model: CylinderModel, rho: complex) -> Connection:
    """diag(a, 1/a) on rightward bulk edges, a^n = rho.

    A boundary edge carries (a, 1/a) when its white end is on the left and
    (1/a, a) otherwise, so an arc returning to its own side weighs 2 and a
    traversing arc weighs rho + 1/rho.
    """
    rho = complex(rho)
    if rho == 0:
        raise CylinderError("rho must be nonzero")
    a = rho ** (1.0 / model.n) if rho.imag or rho.real < 0 else abs(rho) ** (1.0 / model.n)
    g = model.base
    bset = set(model.boundary)
    conn = Connection(identity_default=True)
    diag = np.diag([a, 1 / a])
    for y in range(1, model.m + 1):
        for x in range(model.n):
            u, v = g.index[(x, y)], g.index[(x + 1, y)]
            if u in bset or v in bset:
                bulk, bd = (v, u) if u in bset else (u, v)
                w = u if not g.is_black[u] else v
                white_left = g.coords[w][0] == x
                conn.set_boundary(bulk, bd, [a, 1 / a] if white_left else [1 / a, a])
            else:
                conn.set_edge(u, v, diag)
    return conn


def pfaffian_ratio(model: CylinderModel, rho: complex) -> complex:
    """Pf K_a / Pf K for the cylinder connection at rho."""
    ph = complex_phases(model.base)
    k1 = assemble_K(model.folded, cylinder_connection(model, 1.0), ph).data
    ka = assemble_K(model.folded, cylinder_connection(model, rho), ph).data
    p1 = pfaffian(k1)
    if p1.log_abs == -math.inf:
        raise CylinderError("the cylinder has no dimer cover")
    return pfaffian(ka).ratio(p1)


def traversal_gf(n: int, m: int, rhos: Sequence[complex]) -> np.ndarray:
    """E[((rho + 1/rho)/2)^N] for each rho, from the Pfaffian ratio."""
    model = cylinder_model(n, m)
    return np.array([pfaffian_ratio(model, r) for r in rhos])


def traversal_gf_y(n: int, m: int, ys: Sequence[float]) -> np.ndarray:
    """Same as ``traversal_gf`` but parametrised by Y."""
    return traversal_gf(n, m, [rho_from_y(y) for y in ys])


def count_traversing(model: CylinderModel, cfg) -> int:
    left = set(model.left)
    right = set(model.right)
    k = 0
    for p in cfg.arcs:
        a, b = p[0], p[-1]
        if (a in left and b in right) or (a in right and b in left):
            k += 1
    return k


def cylinder_adjacency(n: int, m: int) -> tuple[list, list]:
    """Vertices (x, y) of Z/2nZ x [1, m] with x in (-n, n], and adjacency lists."""
    verts = [(x, y) for x in range(-n + 1, n + 1) for y in range(1, m + 1)]
    idx = {v: k for k, v in enumerate(verts)}

    def wrap(x: int) -> int:
        return (x + n - 1) % (2 * n) - n + 1

    adj = []
    for x, y in verts:
        row = [idx[(wrap(x + 1), y)], idx[(wrap(x - 1), y)]]
        row += [idx[(x, yy)] for yy in (y - 1, y + 1) if 1 <= yy <= m]
        adj.append(row)
    return verts, adj


def brute_force_distribution(n: int, m: int, cap: int = 2 * 10**6) -> np.ndarray:
    """P[N = k] for k = 0..m by enumerating the covers of the cylinder.

    Each cover is superimposed onto the base rectangle by sending (x, y)
    to (|x|, y), and the traversing arcs of the result are counted.
    """
    model = cylinder_model(n, m)
    verts, adj = cylinder_adjacency(n, m)
    base = [model.base.index[(abs(x), y)] for x, y in verts]
    counts = np.zeros(m + 1, dtype=np.int64)
    for mt in _match_recursive(adj, cap):
        mult: dict = {}
        for a, b in mt:
            e = (min(base[a], base[b]), max(base[a], base[b]))
            mult[e] = mult.get(e, 0) + 1
        cfg = config_from_multigraph(model.base, model.boundary, mult)
        counts[count_traversing(model, cfg)] += 1
    return counts / counts.sum()


def distribution_from_gf(n: int, m: int) -> np.ndarray:
    """P[N = k] recovered by interpolating the generating function in Y.

    The generating function is a polynomial of degree at most m; it is
    sampled at m + 1 Chebyshev nodes in [1, 2].
    """
    k = np.arange(m + 1)
    ys = 1.5 + 0.5 * np.cos((2 * k + 1) * np.pi / (2 * (m + 1)))
    vals = traversal_gf_y(n, m, ys).real
    coeffs = np.polynomial.polynomial.polyfit(ys, vals, m)
    return coeffs


def limit_product(q: float, Y: float, tol: float = 1e-12, max_terms: int = 10**6) -> float:
    """Infinite product over odd j of (1 + q^2j - 2q^j + 4Y^2 q^j)/(1 + q^2j + 2q^j).

    Each log factor is bounded by |4Y^2 - 4| q^j, so the product stops once
    the geometric tail bound |4Y^2 - 4| q^j / (1 - q^2) falls below ``tol``.
    """
    if not 0 < q < 1:
        raise CylinderError("q must lie in (0, 1)")
    c = abs(4 * Y * Y - 4)
    log_val = 0.0
    j = 1
    for _ in range(max_terms):
        qj = q**j
        log_val += math.log((1 + qj * qj - 2 * qj + 4 * Y * Y * qj) / (1 + qj * qj + 2 * qj))
        j += 2
        if c * q**j / (1 - q * q) <= tol:
            return math.exp(log_val)
    raise CylinderError("product did not reach the tail tolerance")


def limit_product_alt_denominator(q: float, Y: float, j_max: int = 4001) -> float:
    """The variant with denominator 1 + q^j + q^2j; it is not 1 at Y = 1."""
    out = 1.0
    for j in range(1, j_max, 2):
        qj = q**j
        out *= (1 + qj * qj - 2 * qj + 4 * Y * Y * qj) / (1 + qj + qj * qj)
    return out


def finite_vs_limit(n: int, m: int, Y: float) -> dict:
    """Finite Pfaffian ratio against the limit product at q = exp(-pi n/m)."""
    finite = traversal_gf_y(n, m, [Y])[0].real
    q = math.exp(-math.pi * n / m)
    lim = limit_product(q, Y)
    return {"n": n, "m": m, "Y": Y, "finite": float(finite), "limit": lim, "gap": abs(finite - lim)}
