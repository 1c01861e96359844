"""Lattice domains symmetric under y -> -y and their Temperleyan graphs.

Coordinates are kept as exact integers.  A ``SymmetricLatticeDomain`` stores
lattice points in units of the mesh ``eps``; a ``LatticeGraph`` stores its
vertices in half-lattice units, so that edge midpoints (white vertices) and
face centres (black ``B0`` vertices) have integer coordinates too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised for invalid domain descriptors or graph constructions."""


class NodeClass(IntEnum):
    W0 = 0  # vertical lattice edge
    W1 = 1  # horizontal lattice edge
    B0 = 2  # inner face
    B1 = 3  # lattice vertex
    W = 4  # white vertex of a plain lattice graph
    B = 5  # black vertex of a plain lattice graph


WHITE_CLASSES = (NodeClass.W0, NodeClass.W1, NodeClass.W)

_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetricLatticeDomain:
    """A simply connected union of lattice cells, symmetric across y = 0.

    ``cells`` holds the lower-left corners ``(i, j)`` of the unit cells of
    the square cover, in lattice units.  The real position of the lattice
    point ``(i, j)`` is ``(i * eps, j * eps)``.
    """

    eps: float
    cells: frozenset
    anchor: tuple[int, int]
    delta: float
    name: str = "domain"

    @property
    def vertices(self) -> set[tuple[int, int]]:
        pts = set()
        for i, j in self.cells:
            pts.update(((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)))
        return pts

    @property
    def edges(self) -> set[tuple[tuple[int, int], tuple[int, int]]]:
        out = set()
        for i, j in self.cells:
            out.add(((i, j), (i + 1, j)))
            out.add(((i, j + 1), (i + 1, j + 1)))
            out.add(((i, j), (i, j + 1)))
            out.add(((i + 1, j), (i + 1, j + 1)))
        return out

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        xs = [c[0] for c in self.cells]
        ys = [c[1] for c in self.cells]
        return min(xs), min(ys) - 0, max(xs) + 1, max(ys) + 1

    def shape(self) -> tuple[int, int]:
        """Number of vertex columns and rows of the bounding box."""
        x0, y0, x1, y1 = self.bbox
        return x1 - x0 + 1, y1 - y0 + 1

    def to_real(self, i: float, j: float) -> complex:
        return complex(i * self.eps, j * self.eps)


def _inside_rectilinear(poly: Sequence[tuple[int, int]], px: float, py: float) -> bool:
    # Even-odd ray casting; callers only pass half-integer points so the ray
    # never touches a polygon vertex.
    inside = False
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        if (y1 > py) != (y2 > py):
            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if xc > px:
                inside = not inside
    return inside


def _cells_connected(cells: frozenset) -> bool:
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        i, j = stack.pop()
        for di, dj in _STEPS:
            nb = (i + di, j + dj)
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(cells)


def _holes_absent(cells: frozenset) -> bool:
    """Flood fill the complement inside a padded box; it must be connected."""
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x0, x1 = min(xs) - 1, max(xs) + 1
    y0, y1 = min(ys) - 1, max(ys) + 1
    empty = {
        (i, j)
        for i in range(x0, x1 + 1)
        for j in range(y0, y1 + 1)
        if (i, j) not in cells
    }
    start = (x0, y0)
    seen = {start}
    stack = [start]
    # 8-connectivity for the complement pairs with 4-connectivity for cells
    moves = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    while stack:
        i, j = stack.pop()
        for di, dj in moves:
            nb = (i + di, j + dj)
            if nb in empty and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(empty)


def is_simply_connected(cells: Iterable[tuple[int, int]]) -> bool:
    """Flood-fill test for a union of closed unit cells."""
    cells = frozenset(cells)
    if not _cells_connected(cells):
        return False
    if not _holes_absent(cells):
        return False
    # corner-only contacts pinch the region; reject them as well
    for i, j in cells:
        for di, dj in ((1, 1), (1, -1)):
            if (i + di, j + dj) in cells and (i + di, j) not in cells and (i, j + dj) not in cells:
                return False
    return True


def parse_descriptor(text: str) -> dict[str, str]:
    """Parse the ``key = value`` domain descriptor format.

    Blank lines and ``#`` comments are ignored.  Keys are case sensitive.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise DomainError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_descriptor(path: str | Path) -> dict[str, str]:
    return parse_descriptor(Path(path).read_text())


_DESCRIPTOR_KEYS = {
    "rectangle": {"kind", "x_min", "x_max", "half_height", "eps", "anchor", "delta", "name"},
    "strip": {"kind", "rows", "aspect", "anchor", "delta", "name"},
    "polygon": {"kind", "points", "eps", "anchor", "delta", "name"},
}


def _to_units(value: float, eps: float, what: str) -> int:
    k = round(value / eps)
    if abs(k * eps - value) > 1e-9 * max(1.0, abs(value)):
        raise DomainError(f"{what}={value} is not a multiple of eps={eps}")
    return int(k)


def _pair(text: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise DomainError(f"expected 'x, y', got {text!r}")
    return _eval_number(parts[0]), _eval_number(parts[1])


def _eval_number(text: str) -> float:
    # accepts plain floats and simple multiples of pi such as "pi/4"
    t = text.replace(" ", "").lower()
    if "pi" not in t:
        return float(t)
    coef, _, rest = t.partition("pi")
    if coef in ("", "+"):
        c = 1.0
    elif coef == "-":
        c = -1.0
    else:
        c = float(coef.rstrip("*"))
    val = c * math.pi
    if rest:
        if not rest.startswith("/"):
            raise DomainError(f"cannot parse number {text!r}")
        val /= float(rest[1:])
    return val


def build_symmetric_domain(
    descriptor: Mapping[str, str] | str, eps: float | None = None
) -> SymmetricLatticeDomain:
    """Build a symmetric lattice domain from a descriptor.

    Supported kinds are ``rectangle`` (``x_min``, ``x_max``, ``half_height``),
    ``strip`` (height pi, ``rows`` cells high and ``aspect * rows`` cells wide,
    centred at the origin) and ``polygon`` (a rectilinear outline ``points``).
    ``anchor`` is the flat boundary point z_d as ``x, y`` and ``delta`` the
    radius of the flat ball around it.
    """
    if isinstance(descriptor, str):
        descriptor = parse_descriptor(descriptor)
    d = dict(descriptor)
    kind = d.get("kind")
    if kind not in _DESCRIPTOR_KEYS:
        raise DomainError(f"unknown domain kind {kind!r}")
    unknown = set(d) - _DESCRIPTOR_KEYS[kind]
    if unknown:
        raise DomainError(f"unknown descriptor keys: {sorted(unknown)}")
    name = d.get("name", kind)

    if kind == "strip":
        rows = int(d.get("rows", "40"))
        if rows < 2 or rows % 2:
            raise DomainError("strip rows must be a positive even integer")
        aspect = float(d.get("aspect", "4"))
        eps = math.pi / rows
        width = int(round(aspect * rows))
        if width % 2:
            width += 1
        half_w, half_h = width // 2, rows // 2
        cells = frozenset((i, j) for i in range(-half_w, half_w) for j in range(-half_h, half_h))
        ax, _ = _pair(d["anchor"]) if "anchor" in d else (0.0, 0.0)
        anchor = (int(round(ax / eps)), half_h)
        delta = _eval_number(d.get("delta", "pi/4"))
    else:
        if eps is None:
            if "eps" not in d:
                raise DomainError("eps missing")
            eps = _eval_number(d["eps"])
        if eps <= 0:
            raise DomainError("eps must be positive")
        if kind == "rectangle":
            x0 = _to_units(_eval_number(d["x_min"]), eps, "x_min")
            x1 = _to_units(_eval_number(d["x_max"]), eps, "x_max")
            h = _to_units(_eval_number(d["half_height"]), eps, "half_height")
            if x1 <= x0 or h <= 0:
                raise DomainError("empty rectangle")
            cells = frozenset((i, j) for i in range(x0, x1) for j in range(-h, h))
        else:
            raw = [p for p in d["points"].split(";") if p.strip()]
            pts = [_pair(p) for p in raw]
            poly = [(_to_units(x, eps, "x"), _to_units(y, eps, "y")) for x, y in pts]
            for k in range(len(poly)):
                a, b = poly[k], poly[(k + 1) % len(poly)]
                if a[0] != b[0] and a[1] != b[1]:
                    raise DomainError("polygon must be rectilinear")
            mirrored = {(x, -y) for x, y in poly}
            if mirrored != set(poly):
                raise DomainError("polygon is not symmetric across y = 0")
            xs = [p[0] for p in poly]
            ys = [p[1] for p in poly]
            cells = frozenset(
                (i, j)
                for i in range(min(xs), max(xs))
                for j in range(min(ys), max(ys))
                if _inside_rectilinear(poly, i + 0.5, j + 0.5)
            )
        if "anchor" in d:
            ax, ay = _pair(d["anchor"])
            anchor = (_to_units(ax, eps, "anchor x"), _to_units(ay, eps, "anchor y"))
        else:
            top = max(j for _, j in cells) + 1
            xs_top = sorted(i for i, j in cells if j + 1 == top)
            anchor = ((xs_top[0] + xs_top[-1] + 1) // 2, top)
        delta = _eval_number(d.get("delta", str(eps)))

    dom = SymmetricLatticeDomain(eps=eps, cells=cells, anchor=anchor, delta=delta, name=name)
    validate_domain(dom)
    return dom


def validate_domain(dom: SymmetricLatticeDomain) -> None:
    cells = dom.cells
    if not cells:
        raise DomainError("domain has no cells")
    if {(i, -j - 1) for i, j in cells} != set(cells):
        raise DomainError("domain is not symmetric across y = 0")
    if not is_simply_connected(cells):
        raise DomainError("square cover is not simply connected")
    # flat horizontal boundary around the anchor, domain below it
    ai, aj = dom.anchor
    r = max(1, int(math.floor(dom.delta / dom.eps + 1e-9)))
    for i in range(ai - r, ai + r):
        if (i, aj - 1) not in cells or (i, aj) in cells:
            raise DomainError("no flat horizontal boundary segment around the anchor")
    for i, j in cells:
        if abs(i + 0.5 - ai) < r and j >= aj:
            raise DomainError("domain extends above the flat segment")
    if not any(j == 0 for _, j in cells):
        raise DomainError("domain does not meet the axis")


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


@dataclass
class LatticeGraph:
    """Bipartite subgraph of the square lattice, with integer coordinates.

    Vertices are black when the coordinate sum is even.  Two vertices are
    adjacent exactly when they are at distance one; bounded faces are the
    unit squares whose four corners are present.
    """

    coords: np.ndarray
    classes: np.ndarray
    variant: str = "plain"
    eps: float = 1.0
    scale: float = 1.0  # real length of one coordinate unit, in units of eps
    b0: tuple[int, int] | None = None
    corners: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.coords = np.asarray(self.coords, dtype=np.int64).reshape(-1, 2)
        self.classes = np.asarray(self.classes, dtype=np.int8)
        self.index = {(int(x), int(y)): k for k, (x, y) in enumerate(self.coords)}
        if len(self.index) != len(self.coords):
            raise DomainError("duplicate vertex coordinates")
        s = self.coords.sum(axis=1)
        self.is_black = (s % 2) == 0
        n = len(self.coords)
        nbrs = []
        for k in range(n):
            x, y = self.coords[k]
            row = []
            for dx, dy in _STEPS:
                j = self.index.get((int(x + dx), int(y + dy)))
                if j is not None:
                    row.append(j)
            nbrs.append(tuple(row))
        self.neighbors = tuple(nbrs)
        self.whites = np.flatnonzero(~self.is_black)
        self.blacks = np.flatnonzero(self.is_black)
        self.white_pos = {int(v): k for k, v in enumerate(self.whites)}
        self.black_pos = {int(v): k for k, v in enumerate(self.blacks)}
        ew, eb = [], []
        for w in self.whites:
            for b in self.neighbors[w]:
                ew.append(int(w))
                eb.append(int(b))
        self.edge_w = np.array(ew, dtype=np.int64)
        self.edge_b = np.array(eb, dtype=np.int64)
        self.edge_index = {(w, b): k for k, (w, b) in enumerate(zip(ew, eb))}

    # -- basic queries -----------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return len(self.edge_w)

    def edge_id(self, u: int, v: int) -> int:
        if self.is_black[u]:
            u, v = v, u
        return self.edge_index[(u, v)]

    def position(self, k: int) -> complex:
        """Embedded position of vertex ``k`` as a complex number (real units)."""
        x, y = self.coords[k]
        return complex(x, y) * self.scale * self.eps

    def positions(self) -> np.ndarray:
        return (self.coords[:, 0] + 1j * self.coords[:, 1]) * self.scale * self.eps

    def faces(self) -> list[tuple[int, int, int, int]]:
        """Bounded faces as vertex 4-tuples, counterclockwise from lower-left."""
        out = []
        for (x, y), k in self.index.items():
            a = self.index.get((x + 1, y))
            b = self.index.get((x + 1, y + 1))
            c = self.index.get((x, y + 1))
            if a is not None and b is not None and c is not None:
                out.append((k, a, b, c))
        out.sort()
        return out

    def is_connected(self) -> bool:
        n = self.n_vertices
        if n == 0:
            return True
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return bool(seen.all())

    def euler_ok(self) -> bool:
        """Connected with V - E + F = 1, i.e. simply connected as a planar map."""
        return self.is_connected() and self.n_vertices - self.n_edges + len(self.faces()) == 1

    def dump(self) -> str:
        """Adjacency list text dump with class labels, for debugging."""
        lines = [f"# variant={self.variant} eps={self.eps!r} vertices={self.n_vertices}"]
        for k in range(self.n_vertices):
            x, y = self.coords[k]
            nb = " ".join(str(j) for j in self.neighbors[k])
            lines.append(f"{k} {NodeClass(int(self.classes[k])).name} {x} {y} : {nb}")
        return "\n".join(lines) + "\n"


def lattice_graph(points: Iterable[tuple[int, int]], variant: str = "plain") -> LatticeGraph:
    """Induced subgraph of Z^2 on ``points`` (unit spacing)."""
    pts = sorted(set((int(x), int(y)) for x, y in points), key=lambda p: (p[1], p[0]))
    coords = np.array(pts, dtype=np.int64).reshape(-1, 2)
    cls = np.where(coords.sum(axis=1) % 2 == 0, NodeClass.B, NodeClass.W)
    return LatticeGraph(coords=coords, classes=cls, variant=variant)


def grid_graph(nx: int, ny: int) -> LatticeGraph:
    return lattice_graph((x, y) for x in range(nx) for y in range(ny))


def _classify(x: int, y: int) -> NodeClass:
    if x % 2 == 0 and y % 2 == 0:
        return NodeClass.B1
    if x % 2 and y % 2:
        return NodeClass.B0
    if x % 2 == 0:
        return NodeClass.W0
    return NodeClass.W1


def _temperley_graph(
    nodes: Iterable[tuple[int, int]], variant: str, eps: float, b0, meta: dict
) -> LatticeGraph:
    pts = sorted(set(nodes), key=lambda p: (p[1], p[0]))
    coords = np.array(pts, dtype=np.int64).reshape(-1, 2)
    cls = np.array([_classify(int(x), int(y)) for x, y in coords], dtype=np.int8)
    g = LatticeGraph(coords=coords, classes=cls, variant=variant, eps=eps, scale=0.5, b0=b0, meta=meta)
    if len(g.whites) != len(g.blacks):
        raise DomainError(f"unbalanced Temperleyan graph: |W|={len(g.whites)} |B|={len(g.blacks)}")
    return g


def build_temperleyan(dom: SymmetricLatticeDomain, b0: tuple[int, int] | None = None) -> LatticeGraph:
    """Temperleyan graph of a symmetric domain (variant ``symmetric-r``).

    Black vertices are the lattice vertices (``B1``, minus the removed vertex
    ``b0``) and the inner faces (``B0``); white vertices are the vertical
    (``W0``) and horizontal (``W1``) lattice edges.  By default ``b0`` is the
    rightmost lattice vertex on the axis.  ``b0`` is given in lattice units.
    """
    verts = dom.vertices
    axis = sorted(i for i, j in verts if j == 0)
    if not axis:
        raise DomainError("no lattice vertex on the axis")
    if b0 is None:
        b0 = (axis[-1], 0)
    if b0 not in verts:
        raise DomainError("b0 is not a lattice vertex of the domain")
    nodes = {(2 * i, 2 * j) for i, j in verts if (i, j) != b0}
    for (a, b) in dom.edges:
        nodes.add((a[0] + b[0], a[1] + b[1]))
    for i, j in dom.cells:
        nodes.add((2 * i + 1, 2 * j + 1))
    meta = {"domain": dom.name, "anchor": dom.anchor, "delta": dom.delta}
    return _temperley_graph(nodes, "symmetric-r", dom.eps, (2 * b0[0], 2 * b0[1]), meta)


def restrict_upper(g: LatticeGraph, strict: bool = False) -> LatticeGraph:
    """Upper-half restriction of a symmetric Temperleyan graph.

    ``strict=False`` keeps the axis row (Temperleyan, same ``b0``).
    ``strict=True`` removes the axis vertices and axis edges; the result is
    piecewise Temperleyan with two convex white corners at the ends of the
    cut, recorded in ``corners``.
    """
    if g.variant != "symmetric-r":
        raise DomainError("restrict_upper needs the symmetric variant")
    lo = 1 if strict else 0
    nodes = [(int(x), int(y)) for x, y in g.coords if y >= lo]
    if strict:
        h = _temperley_graph(nodes, "strict-upper-2", g.eps, None, dict(g.meta))
        cut = [k for k in range(h.n_vertices) if h.coords[k][1] == 1]
        cut.sort(key=lambda k: h.coords[k][0])
        corners = (cut[0], cut[-1])
        for c in corners:
            if h.classes[c] != NodeClass.W0 or len(h.neighbors[c]) != 2:
                raise DomainError("cut row does not end in convex white corners")
        h.corners = corners
        return h
    return _temperley_graph(nodes, "upper-1", g.eps, g.b0, dict(g.meta))


def axis_vertices(g: LatticeGraph) -> list[int]:
    """Vertices on the axis (y = 0), left to right."""
    ks = [k for k in range(g.n_vertices) if g.coords[k][1] == 0]
    return sorted(ks, key=lambda k: g.coords[k][0])


def reflect_index(g: LatticeGraph) -> np.ndarray:
    """Index of the mirror image of every vertex (requires symmetry)."""
    out = np.empty(g.n_vertices, dtype=np.int64)
    for k, (x, y) in enumerate(g.coords):
        out[k] = g.index[(int(x), int(-y))]
    return out
