import math

import numpy as np
import pytest

from arcdimer.arcs import (
    ArcSampler,
    MOMENT_KEYS,
    arc_stats,
    estimate_moments,
    exact_distribution,
    fold,
    height_increments,
    jackknife,
    report_from_samples,
    superimpose_config,
)
from arcdimer.lattice import build_symmetric_domain, build_temperleyan, restrict_upper
from arcdimer.sampler import mate_to_matching, sample_seeds, temperley_data, wilson_mate
from arcdimer.zipper import build_zipper


@pytest.fixture(scope="module")
def medium():
    dom = build_symmetric_domain("kind=rectangle\neps=1\nx_min=-4\nx_max=4\nhalf_height=3")
    gr = build_temperleyan(dom)
    g1 = restrict_upper(gr)
    return gr, g1, restrict_upper(gr, True), build_zipper(g1, [-0.75 + 0.75j, 1.5 + 3j])


def test_fast_statistics_match_the_slow_path(medium):
    gr, g1, g2, zp = medium
    seeds = sample_seeds(3, 0, 60)
    td, td1, td2 = temperley_data(gr), temperley_data(g1), temperley_data(g2)
    for model in ("folded", "shifted"):
        fast = ArcSampler(model, gr, zp).run(seeds)
        for s, (n, r) in zip(seeds, fast):
            if model == "folded":
                cfg = fold(gr, g1, mate_to_matching(gr, wilson_mate(td, int(s))).edges)
            else:
                m1 = mate_to_matching(g1, wilson_mate(td1, int(s))).edges
                m2 = mate_to_matching(g2, wilson_mate(td2, int(s) ^ 0x5DEECE66)).edges
                cfg = superimpose_config(g1, g2, m1, m2)
            st = arc_stats(cfg, zp)
            assert (st.n, st.r) == (n, r)
            assert st.o in (0, 1)
            height_increments(cfg)  # raises on an inconsistent orientation


def test_parity_identity_on_enumeration():
    dom = build_symmetric_domain("kind=rectangle\neps=1\nx_min=-1\nx_max=1\nhalf_height=2")
    gr = build_temperleyan(dom)
    zp = build_zipper(restrict_upper(gr), [-0.75 + 0.75j, 0.5 + 2j])
    for model in ("folded", "shifted"):
        m = exact_distribution(model, gr, zp).moments()
        assert m["P_o_valid"] == 1.0 and m["P_parity"] == 1.0


def test_jackknife_of_a_mean_is_the_standard_error(rng):
    x = rng.normal(size=(500, 1))
    est, se = jackknife(x, lambda m: m)
    assert est[0] == pytest.approx(x.mean())
    assert se[0] == pytest.approx(x.std(ddof=1) / math.sqrt(500), rel=1e-10)


def test_report_keys_and_json():
    rep = report_from_samples("folded", 0.1, np.array([[1, 0], [0, 0], [2, 1], [1, 0]]))
    assert set(rep.estimates) == set(MOMENT_KEYS)
    assert rep.estimates["E_n"] == pytest.approx(1.0)
    assert rep.rows()[2] == (2, 0, 1, 1)
    assert '"provenance": "monte-carlo"' in rep.to_json()


def test_thread_count_does_not_change_results(medium):
    gr, _, _, zp = medium
    a = estimate_moments("folded", gr, zp, 600, seed=4, threads=1, chunk=100)
    b = estimate_moments("folded", gr, zp, 600, seed=4, threads=3, chunk=100)
    assert np.array_equal(a.samples, b.samples)


@pytest.mark.parametrize("model", ["folded", "shifted"])
def test_monte_carlo_agrees_with_exact_trace_moments(model):
    from arcdimer.zipper import model_system, moments_from_traces, trace_series

    y = math.pi / 4
    gr = build_temperleyan(build_symmetric_domain("kind=strip\nrows=12\naspect=4"))
    zp = build_zipper(restrict_upper(gr), [1j * y, y + 1j * math.pi / 2])
    exact = moments_from_traces(trace_series(model_system(model, gr, zp), 6))
    rep = estimate_moments(model, gr, zp, 20000, seed=21)
    for k in ("E_o", "E_n"):
        assert abs(rep.estimates[k] - exact[k]) < 4 * rep.stderr[k]
