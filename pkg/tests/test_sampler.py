import numpy as np
import pytest
from scipy.stats import chisquare

from arcdimer.enumeration import enumerate_matchings
from arcdimer.lattice import build_symmetric_domain, build_temperleyan, grid_graph, restrict_upper
from arcdimer.sampler import (
    DeterminantalSampler,
    SamplerError,
    check_mate,
    edge_marginals,
    sample_seeds,
    sample_wilson,
    temperley_data,
    wilson_mate,
)

DESC = "kind=rectangle\neps=1\nx_min=-1\nx_max=1\nhalf_height=1"


@pytest.fixture(scope="module")
def graphs():
    gr = build_temperleyan(build_symmetric_domain(DESC))
    return gr, restrict_upper(gr), restrict_upper(gr, strict=True)


def test_seeds_are_counter_based():
    a = sample_seeds(7, 0, 10)
    b = sample_seeds(7, 4, 3)
    assert np.array_equal(a[4:7], b)
    assert len(set(a.tolist())) == 10


def test_wilson_gives_perfect_matchings(graphs):
    for g in graphs:
        td = temperley_data(g)
        for s in range(20):
            check_mate(g, wilson_mate(td, s))


def test_wilson_rejects_plain_graphs():
    with pytest.raises(SamplerError):
        temperley_data(grid_graph(2, 2))


def test_wilson_small_chi_square(graphs):
    g = graphs[1]
    ms = enumerate_matchings(g, vertex_cap=100)
    idx = {m.edges: i for i, m in enumerate(ms)}
    cnt = np.zeros(len(ms))
    td = temperley_data(g)
    for s in sample_seeds(3, 0, 3000):
        cnt[idx[sample_wilson(g, int(s), td).edges]] += 1
    assert chisquare(cnt).pvalue > 0.001


def test_determinantal_sampler_marginals(graphs):
    g = graphs[0]
    ds = DeterminantalSampler(g)
    rng = np.random.default_rng(2)
    marg = edge_marginals(g)
    hits = dict.fromkeys(marg, 0)
    n = 2000
    for _ in range(n):
        for a, b in ds.sample(rng).edges:
            w, bl = (a, b) if not g.is_black[a] else (b, a)
            hits[(w, bl)] += 1
    for e, p in marg.items():
        assert abs(hits[e] / n - p) < 5 * np.sqrt(p * (1 - p) / n) + 1e-9


def test_edge_marginals_sum_to_one(graphs):
    g = graphs[2]
    marg = edge_marginals(g)
    for w in g.whites:
        assert sum(p for (ww, _), p in marg.items() if ww == w) == pytest.approx(1.0)
