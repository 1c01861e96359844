import math

import numpy as np
import pytest

from arcdimer.continuum import (
    ContinuumError,
    ale_targets,
    bell_moments,
    compute_cn,
    quartic_variance,
    half_plane_kernel,
    laplacian_identity_error,
    strip_c1,
    strip_c2,
    strip_kernel,
)
from arcdimer.lattice import build_symmetric_domain, build_temperleyan

Y = math.pi / 4
PATH = [1j * Y, Y + 1j * math.pi / 2]


@pytest.fixture(scope="module")
def cn():
    return compute_cn(strip_kernel(), 1j * Y, waypoints=PATH, n_max=4)


def test_first_two_cn_match_closed_forms(cn):
    assert cn[0] == pytest.approx(strip_c1(Y), abs=1e-9)
    assert cn[1] == pytest.approx(strip_c2(Y), abs=1e-9)


def test_cn_are_path_independent():
    a = compute_cn(strip_kernel(), 1j * Y, waypoints=PATH, n_max=3)
    b = compute_cn(strip_kernel(), 1j * Y, z_boundary=1j * math.pi / 2, n_max=3)
    assert np.allclose(np.asarray(a), np.asarray(b), atol=1e-8)


def test_bell_moments_reproduce_strip_means(cn):
    bm = bell_moments(list(cn))
    tg = ale_targets(Y)
    assert bm["E_o"] == pytest.approx(tg["E_o"], abs=1e-9)
    assert bm["E_n"] == pytest.approx(tg["E_n"], abs=1e-9)


def test_quartic_variance_differs_by_4c2_squared(cn):
    c = list(cn)
    assert bell_moments(c)["var_n"] - quartic_variance(c) == pytest.approx(4 * c[1] ** 2, abs=1e-9)


def test_cn_decay_geometrically(cn):
    assert np.all(np.abs(cn.growth()) < 1)


def test_targets_reject_out_of_range_heights():
    with pytest.raises(ContinuumError):
        ale_targets(2.0)


def test_kernels_are_conformally_related():
    # F_+ on the strip is the pullback of the half-plane one under exp
    hp, st = half_plane_kernel(), strip_kernel()
    u, v = 0.3 + 0.4j, -0.2 + 1.1j
    fu, fv = np.exp(u), np.exp(v)
    assert st.F_plus(u, v) == pytest.approx(hp.F_plus(fu, fv) * fu, rel=1e-10)


def test_discrete_identity_on_a_small_strip():
    g = build_temperleyan(build_symmetric_domain("kind=strip\nrows=8\naspect=2"))
    assert laplacian_identity_error(g) < 1e-9
