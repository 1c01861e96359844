import pytest

from arcdimer.corpus import (
    CorpusError,
    default_entries,
    expansion_sign,
    fixture_record,
    identity_check,
    load_corpus,
    outer_cycle,
    sign_lemma_exhaustive,
)


def test_bundled_fixture_is_complete():
    corpus = load_corpus()
    assert len(corpus) >= 20
    assert {e.name for e, _ in corpus} <= {e.name for e in default_entries()}
    for e, rec in corpus:
        assert rec["folded_vertices"] <= 36
        assert e.n_bulk % 4 == 0


def test_missing_corpus_file(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path / "none.json")


def test_fixture_values_reproduce():
    e, rec = load_corpus()[5]
    fresh = fixture_record(e)
    assert fresh["configurations"] == rec["configurations"]
    assert fresh["matchings"] == rec["matchings"]
    assert complex(*fresh["pf_random0"]) == pytest.approx(complex(*rec["pf_random0"]), rel=1e-12)


def test_outer_cycle_of_rectangle():
    pts = [(x, y) for x in range(3) for y in range(2)]
    assert outer_cycle(pts) == [(0, 0), (0, 1), (1, 1), (2, 1), (2, 0), (1, 0)]


def test_expansion_sign():
    assert [expansion_sign(k) for k in (0, 2, 4, 6)] == [1, -1, 1, -1]


def test_identity_and_negative_control():
    e = default_entries()[3]
    assert identity_check(e, n_connections=3).max_rel_error < 1e-10
    assert identity_check(e, n_connections=3, phase_error=0).max_rel_error > 1e-3


def test_empty_boundary_case():
    # with no boundary arcs the expansion is the plain loop-trace sum
    e = next(x for x in default_entries() if not x.boundary)
    assert identity_check(e, n_connections=3).max_rel_error < 1e-10


def test_sign_lemma_on_small_entry():
    n, bad = sign_lemma_exhaustive(default_entries()[0])
    assert n > 0 and bad == 0
