import math

import numpy as np
import pytest

from arcdimer.lattice import (
    DomainError,
    NodeClass,
    axis_vertices,
    build_symmetric_domain,
    build_temperleyan,
    grid_graph,
    parse_descriptor,
    reflect_index,
    restrict_upper,
)
from arcdimer.enumeration import count_matchings
from arcdimer.zipper import kasteleyn_wb

RECT = "kind=rectangle\neps=1\nx_min=-1\nx_max=1\nhalf_height=1"


def test_descriptor_comments_and_duplicates():
    assert parse_descriptor("a = 1 # note\n\nb=2") == {"a": "1", "b": "2"}
    with pytest.raises(DomainError):
        parse_descriptor("a=1\na=2")


def test_unknown_key_rejected():
    with pytest.raises(DomainError):
        build_symmetric_domain(RECT + "\ncolour=red")


def test_asymmetric_polygon_rejected():
    with pytest.raises(DomainError):
        build_symmetric_domain("kind=polygon\neps=1\npoints=0,0; 2,0; 2,1; 0,1")


def test_strip_dimensions():
    dom = build_symmetric_domain("kind=strip\nrows=8\naspect=4")
    assert dom.eps == pytest.approx(math.pi / 8)
    assert dom.shape() == (33, 9)  # lattice points, not cells


def test_temperleyan_is_balanced_and_symmetric():
    g = build_temperleyan(build_symmetric_domain(RECT))
    assert len(g.whites) == int(g.is_black.sum())
    refl = reflect_index(g)
    assert np.all(refl[refl] == np.arange(g.n_vertices))
    assert g.is_connected() and g.euler_ok()


def test_upper_graphs_are_matchable():
    gr = build_temperleyan(build_symmetric_domain(RECT))
    for g in (gr, restrict_upper(gr), restrict_upper(gr, strict=True)):
        assert abs(np.linalg.det(kasteleyn_wb(g).toarray())) > 0.5


def test_kasteleyn_determinant_counts_matchings():
    gr = build_temperleyan(build_symmetric_domain("kind=rectangle\neps=1\nx_min=-2\nx_max=1\nhalf_height=1"))
    for g in (gr, restrict_upper(gr), restrict_upper(gr, True)):
        assert round(abs(np.linalg.det(kasteleyn_wb(g).toarray()))) == count_matchings(g, vertex_cap=200)


def test_axis_and_classes():
    gr = build_temperleyan(build_symmetric_domain(RECT))
    g1 = restrict_upper(gr)
    ax = axis_vertices(g1)
    assert ax and all(g1.coords[v][1] == 0 for v in ax)
    assert set(NodeClass(c) for c in gr.classes) <= {NodeClass.W0, NodeClass.W1, NodeClass.B0, NodeClass.B1}


def test_grid_graph_counts():
    # 2 x n grids have Fibonacci many matchings
    for n, f in ((2, 2), (3, 3), (4, 5), (5, 8)):
        g = grid_graph(n, 2)
        assert round(abs(np.linalg.det(kasteleyn_wb(g).toarray()))) == f
