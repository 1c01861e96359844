import numpy as np
import pytest

from arcdimer.corpus import trivial_connection
from arcdimer.enumeration import count_matchings
from arcdimer.kasteleyn import (
    Connection,
    KasteleynError,
    assemble_K,
    boundary_alternates,
    build_folded_graph,
    complex_phases,
    random_connection,
    random_sl2,
    real_phases,
)
from arcdimer.lattice import grid_graph
from arcdimer.linalg import pfaffian


def test_phase_assignments_are_kasteleyn():
    g = grid_graph(4, 3)
    assert complex_phases(g).is_kasteleyn()
    assert real_phases(g).is_kasteleyn()
    assert set(np.unique(real_phases(g).values.real)) <= {-1.0, 1.0}


def test_boundary_alternation():
    g = grid_graph(3, 2)
    bd = [g.index[(0, 0)], g.index[(0, 1)], g.index[(1, 1)], g.index[(2, 1)]]
    assert boundary_alternates(real_phases(g, bd), bd)


def test_random_sl2_has_unit_determinant(rng):
    for _ in range(20):
        assert abs(np.linalg.det(random_sl2(rng)) - 1) < 1e-12


def test_connection_check_rejects_non_sl2():
    conn = Connection()
    conn.set_edge(0, 1, 2 * np.eye(2))
    with pytest.raises(KasteleynError):
        conn.check()


def test_repeated_boundary_rejected():
    g = grid_graph(2, 2)
    with pytest.raises(KasteleynError):
        build_folded_graph(g, [0, 0])


def test_k_is_skew(rng):
    g = grid_graph(3, 2)
    bd = [g.index[(0, 0)], g.index[(0, 1)]]
    fg = build_folded_graph(g, bd)
    k = assemble_K(fg, random_connection(g, bd, rng), real_phases(g, bd)).data
    assert k.shape == (fg.n_vertices, fg.n_vertices)
    assert np.allclose(k, -k.T)


def test_identity_connection_without_boundary_squares_the_count():
    # with no boundary, G x is two copies glued edge by edge; the identity
    # connection weighs each loop by 2, so Pf K = sum 2^loops = Z(G)^2
    g = grid_graph(4, 2)
    fg = build_folded_graph(g, [])
    pf = pfaffian(assemble_K(fg, trivial_connection(), real_phases(g)).data).value
    assert abs(abs(pf) - count_matchings(g) ** 2) < 1e-9
