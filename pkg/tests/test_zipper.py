import math

import numpy as np
import pytest

from arcdimer.arcs import exact_distribution
from arcdimer.lattice import build_symmetric_domain, build_temperleyan, restrict_upper
from arcdimer.zipper import (
    ZipperError,
    bell_polynomial,
    build_zipper,
    generating_rhs,
    generating_rhs_full,
    model_system,
    moments_from_traces,
    trace_series,
)

DESC = "kind=rectangle\neps=1\nx_min=-2\nx_max=1\nhalf_height=1"


@pytest.fixture(scope="module")
def tiny():
    gr = build_temperleyan(build_symmetric_domain(DESC))
    g1 = restrict_upper(gr)
    return gr, g1, build_zipper(g1, [-0.75 + 0.25j, 1j])


def test_zipper_edges_are_lattice_edges(tiny):
    _, g1, zp = tiny
    assert len(zp) > 0
    for t, h in zp.directed:
        assert h in g1.neighbors[t]


def test_zipper_needs_an_endpoint(tiny):
    _, g1, _ = tiny
    with pytest.raises(ZipperError):
        build_zipper(g1, [0.25 + 0.25j])


def test_compressed_and_full_determinants_agree(tiny):
    gr, _, zp = tiny
    for model in ("folded", "shifted"):
        s = model_system(model, gr, zp)
        a, b = generating_rhs(s, [0.3]), generating_rhs_full(s, [0.3])
        assert abs(a[0] - b[0]) < 1e-10


def test_trace_moments_equal_enumerated_moments(tiny):
    gr, _, zp = tiny
    for model in ("folded", "shifted"):
        ed = exact_distribution(model, gr, zp)
        ts = trace_series(model_system(model, gr, zp), 6)
        tm = moments_from_traces(ts)
        em = ed.moments()
        for k in ("E_o", "E_n"):
            assert tm[k] == pytest.approx(em[k], abs=1e-9)


def test_bell_polynomials():
    x = [2.0, 3.0, 5.0]
    assert bell_polynomial(0, x) == 1
    assert bell_polynomial(1, x) == pytest.approx(2.0)
    assert bell_polynomial(2, x) == pytest.approx(4.0 + 3.0)
    assert bell_polynomial(3, x) == pytest.approx(8.0 + 3 * 2 * 3 + 5)


def test_strip_trace_is_near_continuum():
    from arcdimer.continuum import strip_c1

    y = math.pi / 4
    gr = build_temperleyan(build_symmetric_domain("kind=strip\nrows=12\naspect=4"))
    zp = build_zipper(restrict_upper(gr), [1j * y, y + 1j * math.pi / 2])
    nz = trace_series(model_system("folded", gr, zp), 2).normalized()
    assert abs(nz[0] - strip_c1(y)) < 0.01
