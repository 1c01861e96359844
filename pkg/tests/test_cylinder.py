import math

import numpy as np
import pytest

from arcdimer.cylinder import (
    CylinderError,
    brute_force_distribution,
    cylinder_model,
    distribution_from_gf,
    limit_product,
    limit_product_alt_denominator,
    rho_from_y,
    traversal_gf,
    traversal_gf_y,
)


def test_rho_one_gives_total_mass():
    assert traversal_gf(3, 4, [1.0])[0] == pytest.approx(1.0)


def test_rho_from_y_inverts():
    for y in (1.0, 1.25, 2.0, 0.5):
        r = rho_from_y(y)
        assert (r + 1 / r) / 2 == pytest.approx(y)


@pytest.mark.parametrize("n,m", [(3, 2), (3, 4), (5, 2)])
def test_odd_width_matches_brute_force(n, m):
    p = brute_force_distribution(n, m)
    ys = [0.5, 1.0, 1.25, 1.5, 2.0]
    assert np.allclose(traversal_gf_y(n, m, ys).real, np.polynomial.polynomial.polyval(ys, p), atol=1e-9)
    assert np.allclose(distribution_from_gf(n, m), p, atol=1e-8)


def test_n3_m4_at_rho_2():
    p = brute_force_distribution(3, 4)
    val = traversal_gf(3, 4, [2.0])[0]
    assert val.real == pytest.approx(np.polynomial.polynomial.polyval(1.25, p), abs=1e-9)


def test_boundary_colours_alternate():
    m = cylinder_model(4, 4)
    g = m.base
    for side in (m.left, m.right):
        cols = [bool(g.is_black[v]) for v in side]
        assert all(a != b for a, b in zip(cols, cols[1:]))


def test_limit_product_is_normalised():
    for q in (0.01, 0.1, 0.5):
        assert limit_product(q, 1.0) == pytest.approx(1.0, abs=1e-12)
        assert limit_product_alt_denominator(q, 1.0) > 1.0


def test_limit_at_zero():
    v = limit_product(math.exp(-math.pi), 0.0)
    assert 0 < v < 1


def test_limit_rejects_bad_q():
    with pytest.raises(CylinderError):
        limit_product(1.0, 1.0)


def test_cylinder_needs_size():
    with pytest.raises(CylinderError):
        cylinder_model(1, 2)
