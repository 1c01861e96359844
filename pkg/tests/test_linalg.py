import numpy as np
import pytest

from arcdimer.linalg import (
    LinalgError,
    crossing_parity,
    delete_pair_update,
    det_ratio_series,
    matrix_power_traces,
    newton_traces,
    pairings,
    pfaffian,
    pfaffian_combinatorial,
    rank2_update,
)
from conftest import random_skew


def test_pfaffian_of_2x2_block():
    a = np.array([[0, 3.0], [-3.0, 0]])
    assert pfaffian(a).value == pytest.approx(3.0)


def test_pfaffian_squared_is_det(rng):
    for n in (2, 4, 10, 24):
        a = random_skew(rng, n)
        pf = pfaffian(a).value
        assert abs(pf * pf - np.linalg.det(a)) <= 1e-10 * abs(np.linalg.det(a))


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_pfaffian_matches_pairing_sum(rng, n):
    a = random_skew(rng, n)
    ref = pfaffian_combinatorial(a)
    assert abs(pfaffian(a).value - ref) <= 1e-10 * max(1.0, abs(ref))


def test_odd_dimension_is_zero(rng):
    a = random_skew(rng, 5)
    assert pfaffian(a).value == 0
    assert pfaffian_combinatorial(a) == 0


def test_non_skew_rejected():
    with pytest.raises(LinalgError):
        pfaffian(np.eye(4))


def test_log_form_handles_large_matrices(rng):
    a = random_skew(rng, 200, complex_=False) * 50
    res = pfaffian(a)
    sign, logdet = np.linalg.slogdet(a)
    assert 2 * res.log_abs == pytest.approx(logdet, rel=1e-10)


def test_pairings_count_and_parity():
    ps = list(pairings(list(range(6))))
    assert len(ps) == 15
    assert crossing_parity([(0, 1), (2, 3)]) == 0
    assert crossing_parity([(0, 2), (1, 3)]) == 1


def test_trace_routes_agree(rng):
    a = rng.normal(size=(7, 7)) * 0.3
    assert np.allclose(matrix_power_traces(a, 5), newton_traces(a, 5), atol=1e-10)


def test_det_ratio_series_small_alpha(rng):
    a = rng.normal(size=(6, 6)) * 0.1
    rs = det_ratio_series(a, 30, c=2.0)
    assert abs(rs.series(0.2) - rs.direct(0.2)) < 1e-12
    assert abs(rs.direct(0.2) ** 2 - np.linalg.det(np.eye(6) + 0.4 * a)) < 1e-12


def test_rank2_update_matches_direct_inverse(rng):
    m = random_skew(rng, 8) + 3 * np.eye(8)
    minv = np.linalg.inv(m)
    keep = [0, 1, 3, 4, 6, 7]
    assert np.allclose(rank2_update(minv, [2, 5]), np.linalg.inv(m[np.ix_(keep, keep)]))


def test_delete_pair_update(rng):
    k = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    kinv = np.linalg.inv(k)  # indexed (black, white)
    w, b = 2, 3
    ref = np.linalg.inv(np.delete(np.delete(k, w, axis=0), b, axis=1))
    assert np.allclose(delete_pair_update(kinv, b, w), ref)
