import numpy as np
import pytest

from arcdimer.enumeration import (
    EnumerationCapExceeded,
    config_weight,
    configurations_from_matchings,
    count_matchings,
    enumerate_configurations,
    enumerate_matchings,
    lemma_sign,
    crossing_sign,
    sign_lemma_check,
)
from arcdimer.kasteleyn import build_folded_graph, random_connection
from arcdimer.lattice import grid_graph


def test_fibonacci_counts():
    assert [count_matchings(grid_graph(n, 2)) for n in (2, 3, 4, 5, 6)] == [2, 3, 5, 8, 13]


def test_cap_is_enforced():
    with pytest.raises(EnumerationCapExceeded):
        enumerate_matchings(grid_graph(6, 6), matching_cap=100)


def _setup():
    g = grid_graph(3, 2)
    # clockwise: up the left side, along the top
    bd = [g.index[(0, 0)], g.index[(0, 1)], g.index[(1, 1)], g.index[(2, 1)]]
    return g, bd, build_folded_graph(g, bd)


def test_direct_enumeration_matches_projection():
    g, bd, fg = _setup()
    direct = {c.key() for c in enumerate_configurations(g, bd)}
    projected = {c.key() for c in configurations_from_matchings(fg, enumerate_matchings(fg))}
    assert direct == projected


def test_arcs_join_black_to_white():
    g, bd, _ = _setup()
    for cfg in enumerate_configurations(g, bd):
        for a in cfg.arcs:
            assert g.is_black[a[0]] and not g.is_black[a[-1]]
            assert a[0] in bd and a[-1] in bd


def test_config_weight_is_multiplicative_in_loops(rng):
    g, bd, _ = _setup()
    conn = random_connection(g, bd, rng)
    for cfg in enumerate_configurations(g, bd):
        assert np.isfinite(abs(config_weight(cfg, conn)))


def test_sign_lemma_on_every_matching():
    _, _, fg = _setup()
    ms = enumerate_matchings(fg)
    assert ms and all(sign_lemma_check(m, fg) for m in ms)


def test_literal_doubled_edge_sign_disagrees():
    # the doubled-edge factor needs the extra minus sign: (-1)^(1 + i_e);
    # a 3 x 2 grid has covers with a single doubled edge
    g = grid_graph(3, 2)
    fg = build_folded_graph(g, [])
    ms = enumerate_matchings(fg)
    order = fg.order
    lit = [lemma_sign(m, fg, doubled_convention="literal") * crossing_sign(m, order) for m in ms]
    assert any(x == -1 for x in lit)
