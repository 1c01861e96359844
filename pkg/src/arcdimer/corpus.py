"""Small-graph corpus for the loop/arc expansion of the folded Pfaffian.

Each entry is a small lattice region with a boundary arc of consecutive
outer vertices listed clockwise.  Entries are chosen with |V \\ boundary|
divisible by four, where Pf K equals the loop/arc sum with no extra sign;
``expansion_sign`` gives the general factor (-1)^(|V \\ boundary| / 2).

The committed fixture ``data/corpus.json`` keeps the candidates whose
folded graph has at most ``SIGN_CHECK_CAP`` matchings and records, per
entry, the number
of folded-graph matchings, the number of loop/arc configurations and the
Pfaffian for the trivial connection and for the first seeded random
connection, so later runs can be diffed against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .enumeration import (
    EnumerationCapExceeded,
    enumerate_configurations,
    enumerate_matchings,
    kenyon_rhs,
    sign_lemma_check,
)
from .kasteleyn import Connection, FoldedGraph, assemble_K, build_folded_graph, random_connection, real_phases
from .lattice import LatticeGraph, lattice_graph
from .linalg import pfaffian


class CorpusError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    points: tuple  # lattice points of the base graph
    boundary: tuple  # boundary points in clockwise order

    def graph(self) -> LatticeGraph:
        return lattice_graph(self.points)

    def folded(self) -> tuple[LatticeGraph, FoldedGraph]:
        g = self.graph()
        fg = build_folded_graph(g, [g.index[p] for p in self.boundary])
        return g, fg

    @property
    def n_bulk(self) -> int:
        return len(self.points) - len(self.boundary)


def expansion_sign(n_bulk: int) -> int:
    """(-1)^(n_bulk / 2): Pf K = sign * (loop/arc sum)."""
    return -1 if (n_bulk // 2) % 2 else 1


def outer_cycle(points) -> list:
    """Clockwise walk along the outer boundary, starting at the lowest point
    of the leftmost column and heading up."""
    pts = set(points)
    start = min(pts)
    # right-hand wall following on the lattice (the region stays on the right)
    dirs = [(0, 1), (1, 0), (0, -1), (-1, 0)]
    d = 0
    cur = start
    out = [cur]
    for _ in range(4 * len(pts) + 4):
        for turn in (-1, 0, 1, 2):
            nd = (d + turn) % 4
            nxt = (cur[0] + dirs[nd][0], cur[1] + dirs[nd][1])
            if nxt in pts:
                d, cur = nd, nxt
                break
        if cur == start:
            break
        out.append(cur)
    return out


def _rect(nx: int, ny: int, x0: int = 0, y0: int = 0) -> list:
    return [(x0 + x, y0 + y) for x in range(nx) for y in range(ny)]


def default_entries() -> list[CorpusEntry]:
    """Deterministic list of corpus entries (at most 36 folded vertices)."""
    shapes = {
        "rect2x2": _rect(2, 2),
        "rect3x2": _rect(3, 2),
        "rect4x2": _rect(4, 2),
        "rect2x4": _rect(2, 4),
        "rect4x3": _rect(4, 3),
        "rect3x4": _rect(3, 4),
        "rect5x2": _rect(5, 2),
        "rect6x2": _rect(6, 2),
        "rect4x4": _rect(4, 4),
        "rect5x4": _rect(5, 4),
        "rect6x3": _rect(6, 3),
        "ell3": _rect(3, 2) + _rect(1, 2, 0, 2),
        "ell4": _rect(4, 2) + _rect(2, 2, 0, 2),
        "tee": _rect(5, 2) + _rect(1, 2, 2, 2),
        "step": _rect(3, 2) + _rect(2, 2, 1, 2) + _rect(1, 2, 2, 4),
    }
    out = []
    for name, pts in shapes.items():
        pts = sorted(set(pts))
        cyc = outer_cycle(pts)
        for k in (0, 2, 4, 6):
            for s in (0, 1):
                if k == 0 and s:
                    continue
                bd = cyc[s : s + k]
                if len(bd) != k or len(set(bd)) != k or 2 * len(pts) - k > 36:
                    continue
                if (len(pts) - k) % 4:
                    continue
                e = CorpusEntry(f"{name}-b{k}-s{s}", tuple(pts), tuple(bd))
                g = e.graph()
                nb = sum(1 for p in bd if g.is_black[g.index[p]])
                if 2 * nb != k:
                    continue
                bulk_b = int(g.is_black.sum()) - nb
                if 2 * bulk_b != len(pts) - k:
                    continue
                if not enumerate_configurations(g, [g.index[p] for p in bd]):
                    continue
                out.append(e)
    return out


@dataclass
class IdentityResult:
    name: str
    n_configs: int
    n_connections: int
    max_rel_error: float
    sign: int


def _phases(g: LatticeGraph, fg: FoldedGraph):
    return real_phases(g, list(fg.boundary)) if fg.boundary else real_phases(g)


def trivial_connection() -> Connection:
    return Connection(identity_default=True, default_psi=np.array([1.0, 1.0], dtype=complex))


def identity_check(entry: CorpusEntry, n_connections: int = 20, seed: int = 0, phase_error: int | None = None) -> IdentityResult:
    """Compare Pf K with the signed loop/arc sum for random SL2 connections.

    ``phase_error`` flips the phase of that edge index (a negative control).
    """
    g, fg = entry.folded()
    ph = _phases(g, fg)
    if phase_error is not None:
        ph.values[phase_error] *= 1j
    configs = enumerate_configurations(g, fg.boundary)
    sign = expansion_sign(entry.n_bulk)
    rng = np.random.default_rng([seed, len(entry.points), len(entry.boundary)])
    worst = 0.0
    for _ in range(n_connections):
        conn = random_connection(g, fg.boundary, rng)
        conn.check()
        pf = pfaffian(assemble_K(fg, conn, ph).data).value
        rhs = sign * kenyon_rhs(configs, conn)
        worst = max(worst, abs(pf - rhs) / max(1.0, abs(pf)))
    return IdentityResult(entry.name, len(configs), n_connections, worst, sign)


SIGN_CHECK_CAP = 60_000


def sign_lemma_exhaustive(entry: CorpusEntry, cap: int = SIGN_CHECK_CAP) -> tuple[int, int] | None:
    """(number of matchings, number of disagreements) over all folded matchings.

    Returns None when the folded graph has more than ``cap`` matchings.
    """
    _, fg = entry.folded()
    try:
        ms = enumerate_matchings(fg, vertex_cap=36, matching_cap=cap)
    except EnumerationCapExceeded:
        return None
    bad = sum(0 if sign_lemma_check(m, fg) else 1 for m in ms)
    return len(ms), bad


def pfaffian_values(entry: CorpusEntry, seed: int = 0) -> tuple[complex, complex]:
    """Pf K for the trivial connection and for the first seeded random one."""
    g, fg = entry.folded()
    ph = _phases(g, fg)
    pf0 = pfaffian(assemble_K(fg, trivial_connection(), ph).data).value
    rng = np.random.default_rng([seed, len(entry.points), len(entry.boundary)])
    pf1 = pfaffian(assemble_K(fg, random_connection(g, fg.boundary, rng), ph).data).value
    return pf0, pf1


def fixture_record(entry: CorpusEntry, seed: int = 0) -> dict:
    g, fg = entry.folded()
    pf0, pf1 = pfaffian_values(entry, seed)
    try:
        n_match = len(enumerate_matchings(fg, vertex_cap=36, matching_cap=SIGN_CHECK_CAP))
    except EnumerationCapExceeded:
        n_match = None
    return {
        "name": entry.name,
        "points": [list(p) for p in entry.points],
        "boundary": [list(p) for p in entry.boundary],
        "folded_vertices": fg.n_vertices,
        "matchings": n_match,
        "configurations": len(enumerate_configurations(g, fg.boundary)),
        "pf_trivial": [pf0.real, pf0.imag],
        "pf_random0": [pf1.real, pf1.imag],
    }


def write_fixture(path: str | Path, entries: list[CorpusEntry] | None = None) -> None:
    """Write the fixture, keeping only entries small enough for the exhaustive sign check."""
    entries = entries if entries is not None else default_entries()
    recs = [r for r in (fixture_record(e) for e in entries) if r["matchings"] is not None]
    Path(path).write_text(json.dumps(recs, indent=1) + "\n")


def load_corpus(path: str | Path | None = None) -> list[tuple[CorpusEntry, dict]]:
    """Entries and their recorded values from a fixture (the bundled one by default)."""
    if path is None:
        text = resources.files("arcdimer").joinpath("data/corpus.json").read_text()
    else:
        p = Path(path)
        if not p.exists():
            raise CorpusError(f"corpus file {p} not found")
        text = p.read_text()
    out = []
    for r in json.loads(text):
        e = CorpusEntry(r["name"], tuple(tuple(p) for p in r["points"]), tuple(tuple(p) for p in r["boundary"]))
        out.append((e, r))
    return out
