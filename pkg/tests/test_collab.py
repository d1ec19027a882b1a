import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cityometrics.collab import DyadMatrix, dyad_matrix, expand_links, intra_city_matrix
from cityometrics.delineation import Partition, delineate_distance, delineate_lookup
from cityometrics.errors import UnknownMetro
from cityometrics.fixtures import geneva, upton_berkeley
from cityometrics.gazetteer import (
    Gazetteer,
    Institution,
    InstitutionRegistry,
    Locality,
    MembershipTable,
    resolve_corpus,
)
from cityometrics.records import ingest_lines

from conftest import corpus_of, partition_of, random_setup
import oracles


def _ub():
    fx = upton_berkeley()
    reg = fx.gazetteer()
    c = resolve_corpus(fx.corpus(), reg)
    part = delineate_lookup(reg, MembershipTable.from_rows(fx.memberships), "CSA")
    return fx, c, part


def test_upton_berkeley_cell():
    fx, c, part = _ub()
    m = dyad_matrix(c, part, "integer")
    assert m.get("NY-CSA", "SF-CSA") == 228 == fx.expected["cell"]
    assert m.get("SF-CSA", "NY-CSA") == 228


def test_upton_berkeley_expansion_single_link():
    _, c, part = _ub()
    exp = expand_links(c, part, ("NY-CSA", "SF-CSA"))
    assert exp.locality_links == {("upton", "berkeley"): 228}
    assert exp.metro_cell == 228 and exp.link_total == 228 and exp.multi_locality_papers == 0


def test_expansion_reconciles_and_empty_pairs():
    _, c, part = _ub()
    exp = expand_links(c, part, ("SF-CSA", "chicago"))
    assert exp.link_total >= exp.metro_cell and (exp.link_total > exp.metro_cell) == (exp.multi_locality_papers > 0)
    assert exp.metro_cell == dyad_matrix(c, part).get("SF-CSA", "chicago")
    lonely = corpus_of([["A"], ["B"]])
    p = partition_of({"M1": ["A"], "M2": ["B"]}, ["A", "B"])
    assert expand_links(lonely, p, ("M1", "M2")).locality_links == {}
    with pytest.raises(UnknownMetro):
        expand_links(lonely, p, ("M1", "M9"))


def test_single_unit_paper_adds_nothing_off_diagonal():
    m = dyad_matrix(corpus_of([["A"], ["A", "A"]]), None, "integer")
    assert m.cells == {}


def test_three_units_fractional_thirds():
    m = dyad_matrix(corpus_of([["A", "B", "C"]]), None, "fractional")
    assert m.cells == {("A", "B"): 1 / 3, ("A", "C"): 1 / 3, ("B", "C"): 1 / 3}
    assert sum(Fraction(v) for v in m.cells.values()) == pytest.approx(1, abs=1e-9)


def test_diagonal_counts_papers_within_one_metro():
    p = partition_of({"M": ["A", "B"]}, ["A", "B", "C"])
    c = corpus_of([["A", "B"], ["A", "B", "C"], ["A", "A"]])
    m = dyad_matrix(c, p, "integer")
    assert m.get("M", "M") == 2 and m.get("M", "C") == 1
    assert dyad_matrix(c, p, "integer", include_diagonal=False).get("M", "M") == 0


def test_canonical_keys_enforced():
    with pytest.raises(ValueError):
        DyadMatrix("locality", "integer", {("B", "A"): 1})


def _random_partition(ids, rng):
    groups = {}
    for lid in ids:
        if rng.random() < 0.6:
            groups.setdefault(f"M{rng.randrange(4)}", []).append(lid)
    return partition_of(groups, ids)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000))
def test_dyads_equal_brute_force(seed):
    ids, papers, part = random_setup(seed, n_papers=150)
    c = corpus_of(papers)
    for partition in (None, part):
        unit_of = {l: l for l in ids} if partition is None else partition.unit_of
        for regime in ("integer", "fractional"):
            m = dyad_matrix(c, partition, regime)
            want = oracles.dyads(papers, unit_of, regime, include_diagonal=partition is not None)
            assert set(m.cells) == set(want)
            for key, w in want.items():
                if regime == "integer":
                    assert m.cells[key] == w
                else:
                    assert abs(m.cells[key] - float(w)) <= 1e-12


def test_metro_cell_counts_distinct_joint_papers(rng):
    ids, papers, part = random_setup(3, n_papers=400)
    c = corpus_of(papers)
    m = dyad_matrix(c, part, "integer")
    units = sorted(part.members_of)
    unit_of = part.unit_of
    for a, b in combinations(units, 2):
        joint = sum(1 for p in papers if any(unit_of[l] == a for l in p) and any(unit_of[l] == b for l in p))
        assert m.get(a, b) == joint


def test_expand_links_brute_force():
    rng = random.Random(11)
    ids = [f"a{i}" for i in range(3)] + [f"b{i}" for i in range(3)] + ["z"]
    part = partition_of({"MA": ids[:3], "MB": ids[3:6]}, ids)
    papers = [[rng.choice(ids) for _ in range(rng.randint(1, 5))] for _ in range(300)]
    c = corpus_of(papers)
    exp = expand_links(c, part, ("MA", "MB"))
    want = {}
    cell = multi = 0
    for p in papers:
        a = sorted({l for l in p if l.startswith("a")})
        b = sorted({l for l in p if l.startswith("b")})
        if a and b:
            cell += 1
            multi += len(a) > 1 or len(b) > 1
            for x in a:
                for y in b:
                    want[(x, y)] = want.get((x, y), 0) + 1
    assert exp.locality_links == want
    assert exp.metro_cell == cell == dyad_matrix(c, part).get("MA", "MB")
    assert exp.link_total >= exp.metro_cell
    assert (exp.link_total == exp.metro_cell) == (multi == 0)
    assert str(multi) in exp.note
    diag = expand_links(c, part, ("MA", "MA"))
    assert diag.metro_cell == dyad_matrix(c, part).get("MA", "MA")
    assert all(x < y for x, y in diag.locality_links)


# ---------------------------------------------------------------- intra-city


def _geneva():
    fx = geneva()
    reg = fx.gazetteer()
    c = resolve_corpus(fx.corpus(), reg)
    insts = InstitutionRegistry.build(fx.institutions, reg)
    return fx, reg, c, insts


def test_geneva_cells_by_locality():
    fx, reg, c, insts = _geneva()
    m = intra_city_matrix(c, "geneva", insts, Partition.identity(reg))
    assert (m.get("cern", "unige"), m.get("unige", "who"), m.get("cern", "who")) == (340, 45, 0)
    assert ("cern", "who") in m.cells  # explicit zero


def test_geneva_cells_by_metro():
    fx, reg, c, insts = _geneva()
    part = delineate_distance(reg, 40)
    city = part.unit_of["geneva"]
    assert part.unit_of["meyrin"] == city and part.unit_of["lausanne"] != city
    m = intra_city_matrix(c, city, insts, part)
    assert (m.get("cern", "unige"), m.get("unige", "who"), m.get("cern", "who")) == (340, 45, 0)
    assert "epfl" not in m.units()


def test_unknown_city():
    fx, reg, c, insts = _geneva()
    with pytest.raises(UnknownMetro):
        intra_city_matrix(c, "atlantis", insts, Partition.identity(reg))


def test_city_with_one_institution_is_empty():
    reg = Gazetteer([Locality("x", "Xtown", "T", 0, 0)])
    insts = InstitutionRegistry.build([Institution("i1", "Alpha Univ", "x")], reg)
    c = resolve_corpus(ingest_lines(['{"id":"a","year":2016,"affiliations":[{"raw":"Alpha Univ, Xtown, T"}]}']), reg)
    assert intra_city_matrix(c, "x", insts, Partition.identity(reg)).cells == {}


def test_four_institution_city_brute_force():
    rng = random.Random(5)
    reg = Gazetteer([Locality("x", "Xtown", "T", 0, 0), Locality("y", "Ytown", "T", 0, 2)])
    names = ["Alpha Univ", "Beta Inst", "Gamma Lab", "Delta Hosp"]
    insts = InstitutionRegistry.build([Institution(f"i{k}", n, "x") for k, n in enumerate(names)], reg)
    lines, papers = [], []
    for p in range(300):
        chosen = rng.sample(range(4), rng.randint(1, 4))
        places = [rng.choice(["Xtown", "Xtown", "Ytown"]) for _ in chosen]
        affs = ",".join(f'{{"raw":"{names[k]}, {pl}, T"}}' for k, pl in zip(chosen, places))
        lines.append(f'{{"id":"p{p:04d}","year":2016,"affiliations":[{affs}]}}')
        papers.append({f"i{k}" for k, pl in zip(chosen, places) if pl == "Xtown"})
    c = resolve_corpus(ingest_lines(lines), reg)
    m = intra_city_matrix(c, "x", insts, Partition.identity(reg))
    for a, b in combinations(sorted(f"i{k}" for k in range(4)), 2):
        assert m.get(a, b) == sum(1 for s in papers if a in s and b in s)
    assert len(m.cells) == 6


@pytest.mark.parametrize("threads", [2, 8])
def test_dyads_independent_of_threads(threads):
    ids, papers, part = random_setup(21, n_papers=600)
    c = corpus_of(papers)
    for regime in ("integer", "fractional"):
        assert dyad_matrix(c, part, regime, threads=threads).to_csv() == dyad_matrix(c, part, regime).to_csv()
