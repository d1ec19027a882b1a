from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cityometrics.counting import (
    AttributionPolicy,
    dedup_count,
    fractional_count,
    hq_mismatch,
    institution_count,
    institution_rollup,
    integer_count,
    metro_integer_sum,
    paper_shares,
    percent,
)
from cityometrics.errors import PartitionMismatch, UnknownInstitution, UnresolvedAffiliations
from cityometrics.fixtures import hq, mini_ny
from cityometrics.gazetteer import Gazetteer, Institution, InstitutionRegistry, Locality, resolve_corpus
from cityometrics.records import ingest_lines

from conftest import corpus_of, partition_of, random_setup
import oracles


def test_two_locality_paper():
    c = corpus_of([["A", "B"]])
    assert integer_count(c).credits == {"A": 1, "B": 1}
    part = partition_of({"M": ["A", "B"]}, ["A", "B"])
    loc = integer_count(c)
    assert metro_integer_sum(loc, part).credits == {"M": 2}
    assert dedup_count(c, part).credits == {"M": 1}


def test_nyc_new_brunswick_paper_counted_twice_by_naive_sum():
    c = corpus_of([["nyc", "new_brunswick"], ["nyc"]])
    part = partition_of({"NY-CSA": ["nyc", "new_brunswick"]}, ["nyc", "new_brunswick"])
    loc = integer_count(c)
    assert loc.credits == {"new_brunswick": 1, "nyc": 2}
    assert metro_integer_sum(loc, part).get("NY-CSA") == 3
    assert dedup_count(c, part).get("NY-CSA") == 2


def test_integer_count_matches_enumeration():
    papers = [["A"], ["A", "A", "B"], ["C", "B"], ["D"], ["A", "D", "C"]]
    assert integer_count(corpus_of(papers)).credits == oracles.locality_counts(papers)


def test_singleton_metro_equals_locality_count():
    papers = [["A"], ["A", "B"]]
    part = partition_of({}, ["A", "B"])
    loc = integer_count(corpus_of(papers))
    assert metro_integer_sum(loc, part).credits == loc.credits


def test_fractional_examples():
    c = corpus_of([["tokyo", "beijing"], ["solo"]])
    assert fractional_count(c).credits == {"beijing": 0.5, "solo": 1.0, "tokyo": 0.5}
    assert paper_shares(["A", "A", "B"], "distinct_locality") == {"A": Fraction(1, 2), "B": Fraction(1, 2)}
    assert paper_shares(["A", "A", "B"], "address_instance") == {"A": Fraction(2, 3), "B": Fraction(1, 3)}
    c = corpus_of([["A", "A", "B"]])
    addr = fractional_count(c, AttributionPolicy("address_instance"))
    assert addr.credits == {"A": float(Fraction(2, 3)), "B": float(Fraction(1, 3))}
    assert addr.policy.startswith("basis=address_instance")


def test_mini_ny_fixture_values():
    fx = mini_ny()
    reg = fx.gazetteer()
    c = resolve_corpus(fx.corpus(), reg)
    assert c.unresolved == ()
    members = [l for l, _, _ in fx.memberships]
    part = partition_of({"NY-CSA": members}, reg.ids())
    loc = integer_count(c)
    isum = metro_integer_sum(loc, part)
    dedup = dedup_count(c, part)
    frac = fractional_count(c, AttributionPolicy("distinct_locality", part))
    assert isum.get("NY-CSA") == 100 == fx.expected["integer_sum"]
    assert dedup.get("NY-CSA") == 92 == fx.expected["dedup"]
    assert Fraction(frac.get("NY-CSA")) == Fraction(*fx.expected["fractional_distinct"])
    assert {k: v for k, v in loc.credits.items() if k in members} == fx.expected["locality_integer"]
    # independent enumeration over the resolved papers
    papers = [[a.resolved_locality for a in r.affiliations] for r in c.records]
    unit_of = part.unit_of
    assert dedup.credits == oracles.dedup_counts(papers, unit_of)
    cross = sum(1 for p in papers if len({l for l in p if l in members}) >= 2)
    assert cross == 8


def test_unresolved_tolerance():
    lines = [
        '{"id":"a","year":2016,"affiliations":[{"raw":"U, Pecs, Hungary"},{"raw":"V, Atlantis, Hungary"}]}',
        '{"id":"b","year":2016,"affiliations":[{"raw":"U, Pecs, Hungary"}]}',
    ]
    reg = Gazetteer([Locality("pecs", "Pecs", "Hungary", 46.07, 18.23)])
    c = resolve_corpus(ingest_lines(lines), reg)
    with pytest.raises(UnresolvedAffiliations) as info:
        integer_count(c)
    assert "1 of 3" in str(info.value)
    rep = integer_count(c, tolerance=0.5)
    # papers with any unresolved affiliation drop out of every regime
    assert rep.credits == {"pecs": 1} and rep.unresolved_count == 1 and rep.paper_total == 1
    assert "# unresolved_count: 1" in rep.to_csv()


def test_year_filter_is_applied_first_and_recorded():
    c = corpus_of([["A"]], year=2010)
    d = corpus_of([["B"]], year=2016)
    from cityometrics.records import Corpus
    both = Corpus(c.records + tuple(type(r)(r.id + "x", r.year, r.affiliations) for r in d.records))
    rep = integer_count(both, year_range=(2015, 2020))
    assert rep.credits == {"B": 1} and rep.year_filter == (2015, 2020)
    assert "# year_filter: 2015-2020" in rep.to_csv()


def test_partition_must_cover_localities():
    c = corpus_of([["A", "Z"]])
    with pytest.raises(PartitionMismatch):
        dedup_count(c, partition_of({"M": ["A"]}, ["A"]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_ordering_and_conservation(seed):
    ids, papers, part = random_setup(seed)
    c = corpus_of(papers)
    loc = integer_count(c)
    isum = metro_integer_sum(loc, part)
    dedup = dedup_count(c, part)
    for basis in ("distinct_locality", "address_instance"):
        frac = fractional_count(c, AttributionPolicy(basis, part))
        assert abs(frac.total() - len(papers)) < 1e-6
        exact = oracles.fractional_counts(papers, basis, part.unit_of)
        for unit, v in frac.credits.items():
            assert v == float(exact[unit])
        for unit in isum.credits:
            assert frac.get(unit) <= dedup.get(unit) <= isum.get(unit)
    unit_of = part.unit_of
    for unit, members in part.members_of.items():
        spans = any(len({l for l in p if unit_of[l] == unit}) >= 2 for p in papers)
        assert (dedup.get(unit) == isum.get(unit)) == (not spans)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.sampled_from("ABCDEFG"), min_size=1, max_size=6), min_size=1, max_size=40))
def test_per_paper_shares_sum_to_one(papers):
    for locs in papers:
        for basis in ("distinct_locality", "address_instance"):
            assert sum(paper_shares(locs, basis).values()) == 1


def test_regimes_agree_on_disjoint_corpora():
    papers = [["A"], ["B"], ["A"], ["C"], ["C", "C"]]
    c = corpus_of(papers)
    part = partition_of({"M": ["A", "B"]}, ["A", "B", "C"])
    isum = metro_integer_sum(integer_count(c), part)
    dedup = dedup_count(c, part)
    frac = fractional_count(c, AttributionPolicy("distinct_locality", part))
    assert isum.credits == dedup.credits == frac.credits == {"C": 2, "M": 3}


@pytest.mark.parametrize("threads", [1, 2, 8])
def test_reports_independent_of_threads(threads):
    ids, papers, part = random_setup(99, n_papers=700)
    c = corpus_of(papers)
    ref = fractional_count(c, AttributionPolicy("distinct_locality", part)).to_csv()
    assert fractional_count(c, AttributionPolicy("distinct_locality", part), threads=threads).to_csv() == ref
    assert dedup_count(c, part, threads=threads).to_csv() == dedup_count(c, part).to_csv()
    assert integer_count(c, threads=threads).to_csv() == integer_count(c).to_csv()


# ---------------------------------------------------------------- institutions


def _inst_setup():
    reg = Gazetteer([Locality("x", "Xtown", "T", 0, 0), Locality("y", "Ytown", "T", 0, 1)])
    insts = InstitutionRegistry.build([
        Institution("i1", "Alpha Univ", "x"), Institution("i2", "Beta Inst", "x"), Institution("i3", "Gamma Lab", "y"),
    ], reg)
    return reg, insts


def test_rollup_two_institutions_same_locality():
    _, insts = _inst_setup()
    rep = institution_rollup({"i1": 10, "i2": 5, "i3": 1}, insts)
    assert rep.credits == {"x": 15, "y": 1} and rep.regime == "integer_sum"
    assert any("double count" in n for n in rep.notes)
    with pytest.raises(UnknownInstitution):
        institution_rollup({"nope": 1}, insts)


def test_rollup_exceeds_dedup_by_overlap():
    reg, insts = _inst_setup()
    lines = []
    # 4 papers Alpha+Beta together (overlap), 6 Alpha only, 3 Beta only, 2 Gamma only
    plan = [(["Alpha Univ, Xtown, T", "Beta Inst, Xtown, T"], 4), (["Alpha Univ, Xtown, T"], 6),
            (["Beta Inst, Xtown, T"], 3), (["Gamma Lab, Ytown, T"], 2)]
    n = 0
    for affs, k in plan:
        for _ in range(k):
            raws = ",".join(f'{{"raw":"{a}"}}' for a in affs)
            lines.append(f'{{"id":"p{n}","year":2016,"affiliations":[{raws}]}}')
            n += 1
    c = resolve_corpus(ingest_lines(lines), reg)
    counts = institution_count(c, insts)
    assert counts.credits == {"i1": 10, "i2": 7, "i3": 2}
    rollup = institution_rollup(counts, insts)
    dedup = integer_count(c)
    assert rollup.get("x") - dedup.get("x") == 4
    assert rollup.get("y") == dedup.get("y")


def test_hq_mismatch_ibm_and_creswick():
    fx = hq()
    reg = fx.gazetteer()
    c = resolve_corpus(fx.corpus(), reg)
    insts = InstitutionRegistry.build(fx.institutions, reg)
    rep = hq_mismatch(c, insts)
    ibm = rep.row("ibm")
    assert (ibm.total, ibm.at_hq) == (876, 30)
    assert percent(ibm.at_hq, ibm.total) == "3.4%"
    assert abs(ibm.hq_share * 100 - 3.4) <= 0.05
    um = rep.row("unimelb")
    assert (um.total, um.at_hq) == (249, 200)
    assert list(rep.off_hq["unimelb"]) == fx.expected["unimelb"]["off_hq_ids"]
    assert [r.institution_id for r in rep.rows] == ["ibm", "unimelb"]
    assert rep.unmatched.get("Partner Univ", 0) > 0


def test_hq_share_full():
    reg, insts = _inst_setup()
    c = resolve_corpus(ingest_lines(['{"id":"a","year":2016,"affiliations":[{"raw":"Gamma Lab, Ytown, T"}]}']), reg)
    assert hq_mismatch(c, insts).row("i3").hq_share == 1.0


@pytest.mark.parametrize("num, den, out", [(30, 876, "3.4%"), (67642, 73038, "92.6%"), (92, 100, "92.0%"),
                                           (1, 8, "12.5%"), (1, 2000, "0.1%"), (0, 5, "0.0%")])
def test_percent_display(num, den, out):
    assert percent(num, den) == out
