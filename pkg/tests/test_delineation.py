import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cityometrics.delineation import (
    MetroArea,
    Partition,
    check_partition,
    compare_partitions,
    delineate_distance,
    delineate_lookup,
    delineate_travel_time,
    load_partition,
    partition_csv,
)
from cityometrics.errors import EmptyTier, GazetteerMismatch, MissingPopulation
from cityometrics.fixtures import ny_membership, random_gazetteer
from cityometrics.gazetteer import Gazetteer, Locality, MembershipTable, TravelTimeEdge

from oracles import bfs_components

KM_PER_DEG = 2 * math.pi * 6371.0088 / 360


def _east(km_positions, pops=None):
    """Localities on the equator at the given km offsets."""
    pops = pops or [None] * len(km_positions)
    return Gazetteer([
        Locality(chr(ord("A") + i), chr(ord("A") + i), "T", 0.0, x / KM_PER_DEG, population=p)
        for i, (x, p) in enumerate(zip(km_positions, pops))
    ])


def _groups(p: Partition):
    return {frozenset(m) for m in p.members_of.values()}


# ---------------------------------------------------------------- lookup


def test_ny_membership_csa_has_708():
    fx = ny_membership()
    reg = fx.gazetteer()
    table = MembershipTable.from_rows(fx.memberships)
    csa = delineate_lookup(reg, table, "CSA")
    assert len(csa.by_id["NY-CSA"].members) == 708
    assert csa.singletons == frozenset(f"out{j}" for j in range(5))
    msa = delineate_lookup(reg, table, "MSA")
    assert len(msa.by_id["NY-MSA"].members) == 467
    check_partition(csa, reg)
    check_partition(msa, reg)


def test_empty_table_gives_singletons():
    reg = _east([0, 10, 20])
    p = delineate_lookup(reg, MembershipTable(), "CSA")
    assert p.metros == () and p.singletons == reg.ids()


def test_missing_tier_is_an_error():
    reg = _east([0, 10])
    with pytest.raises(EmptyTier):
        delineate_lookup(reg, MembershipTable.from_rows([("A", "M", "MSA")]), "CSA")


def test_tier_is_exact_match():
    reg = _east([0, 10, 20])
    table = MembershipTable.from_rows([("A", "M1", "MSA"), ("A", "C1", "CSA"), ("B", "C1", "CSA")])
    p = delineate_lookup(reg, table, "CSA")
    assert p.unit_of["A"] == "C1" and p.unit_of["B"] == "C1" and "C" in p.singletons


# ---------------------------------------------------------------- distance


def test_distance_examples():
    assert len(delineate_distance(_east([0, 10]), 40).metros) == 1
    assert len(delineate_distance(_east([0, 41]), 40).metros) == 2
    chain = delineate_distance(_east([0, 30, 60]), 40)
    assert _groups(chain) == {frozenset("ABC")}


def test_threshold_is_inclusive():
    reg = Gazetteer([Locality("a", "a", "T", 0.0, 0.0), Locality("b", "b", "T", 0.0, 1.0)])
    d = 2 * math.pi * 6371.0088 / 360
    assert len(delineate_distance(reg, d).metros) == 1
    assert len(delineate_distance(reg, d - 1e-6).metros) == 2


def test_metro_id_is_largest_population_member():
    p = delineate_distance(_east([0, 10, 20], [50, 900, 900]), 40)
    (metro,) = p.metros
    assert metro.id == "B" and metro.params == "D=40km"


def test_core_population():
    reg = _east([0, 10, 200, 210], [5000, 10, 20, 30])
    p = delineate_distance(reg, 40, core_population=1000)
    assert p.by_id["A"].members == frozenset("AB")
    assert p.by_id["C"].members == frozenset("C") and "below core" in p.by_id["C"].params
    assert p.by_id["D"].members == frozenset("D")
    with pytest.raises(MissingPopulation):
        delineate_distance(_east([0, 10]), 40, core_population=1)


def _random_registry(rng, n):
    return Gazetteer(random_gazetteer(rng, n, spread_deg=rng.choice([0.1, 0.3, 0.6])))


def test_oracle_equivalence_small():
    rng = random.Random(7)
    for _ in range(25):
        reg = _random_registry(rng, rng.randint(1, 60))
        pts = {l.id: (l.lat, l.lon) for l in reg}
        for d in (10, 20, 40, 80):
            assert _groups(delineate_distance(reg, d)) == bfs_components(pts, d)


def test_order_independence(rng):
    locs = random_gazetteer(rng, 80, spread_deg=0.3)
    base = partition_csv(delineate_distance(Gazetteer(locs), 25))
    for _ in range(5):
        rng.shuffle(locs)
        assert partition_csv(delineate_distance(Gazetteer(locs), 25)) == base


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 70))
def test_monotone_coarsening(seed, n):
    reg = _random_registry(random.Random(seed), n)
    parts = [delineate_distance(reg, d) for d in (5, 10, 20, 40, 80, 160)]
    for fine, coarse in zip(parts, parts[1:]):
        assert len(coarse.metros) <= len(fine.metros)
        for group in _groups(fine):
            assert any(group <= g for g in _groups(coarse))


# ---------------------------------------------------------------- travel time


def _uk():
    return Gazetteer([
        Locality("edinburgh", "Edinburgh", "UK", 55.9533, -3.1883, population=500000),
        Locality("leith", "Leith", "UK", 55.9750, -3.1700, population=50000),
        Locality("glasgow", "Glasgow", "UK", 55.8642, -4.2518, population=600000),
        Locality("paisley", "Paisley", "UK", 55.8466, -4.4236, population=77000),
        Locality("aberdeen", "Aberdeen", "UK", 57.1497, -2.0943, population=200000),
    ])


def _uk_base(reg):
    return delineate_distance(reg, 20)


def test_edinburgh_glasgow_merge_below_45():
    reg = _uk()
    base = _uk_base(reg)
    assert base.unit_of["edinburgh"] != base.unit_of["glasgow"]
    merged = delineate_travel_time(base, [TravelTimeEdge("edinburgh", "glasgow", 44)], 45, reg)
    assert merged.unit_of["edinburgh"] == merged.unit_of["glasgow"] == merged.unit_of["leith"]
    assert merged.unit_of["aberdeen"] == "aberdeen"
    check_partition(merged, reg)


def test_exactly_threshold_does_not_merge():
    reg = _uk()
    base = _uk_base(reg)
    same = delineate_travel_time(base, [TravelTimeEdge("edinburgh", "glasgow", 45)], 45, reg)
    assert _groups(same) == _groups(base)
    incl = delineate_travel_time(base, [TravelTimeEdge("edinburgh", "glasgow", 45)], 45, reg, inclusive=True)
    assert incl.unit_of["edinburgh"] == incl.unit_of["glasgow"]


def test_merging_is_transitive():
    reg = _east([0, 500, 1000])
    base = delineate_distance(reg, 40)
    edges = [TravelTimeEdge("A", "B", 40), TravelTimeEdge("B", "C", 40)]
    assert _groups(delineate_travel_time(base, edges, 45, reg)) == {frozenset("ABC")}


def test_merged_id_is_larger_metro():
    reg = _east([0, 10, 500], [1, 2, 3])
    base = delineate_distance(reg, 40)  # {A,B} id B, {C}
    merged = delineate_travel_time(base, [TravelTimeEdge("B", "C", 30)], 45, reg)
    assert [m.id for m in merged.metros] == ["B"]


def test_dangling_edges_are_skipped_and_reported():
    reg = _uk()
    base = _uk_base(reg)
    # leith belongs to the Edinburgh unit but is not its representative
    merged = delineate_travel_time(base, [TravelTimeEdge("leith", "glasgow", 10)], 45, reg)
    assert _groups(merged) == _groups(base)
    assert [e.key for e in merged.skipped_edges] == [("glasgow", "leith")]


def test_travel_time_idempotent(rng):
    for _ in range(10):
        reg = _random_registry(rng, 40)
        base = delineate_distance(reg, 10)
        reps = [m.id for m in base.metros]
        edges = {}
        for _ in range(30):
            a, b = rng.sample(reps, 2)
            edges[tuple(sorted((a, b)))] = TravelTimeEdge(a, b, rng.uniform(10, 90))
        once = delineate_travel_time(base, edges.values(), 45, reg)
        twice = delineate_travel_time(once, edges.values(), 45, reg)
        assert partition_csv(once) == partition_csv(twice)


# ---------------------------------------------------------------- comparison


def test_identical_partitions_have_no_diff():
    reg = _uk()
    p = _uk_base(reg)
    assert compare_partitions(p, p).changed_count == 0


def test_ann_arbor_reported_once():
    reg = Gazetteer([
        Locality("detroit", "Detroit", "USA", 42.3314, -83.0458, admin_name="MI", population=640000),
        Locality("dearborn", "Dearborn", "USA", 42.3223, -83.1763, admin_name="MI", population=110000),
        Locality("warren", "Warren", "USA", 42.5145, -83.0147, admin_name="MI", population=139000),
        Locality("ann_arbor", "Ann Arbor", "USA", 42.2808, -83.7430, admin_name="MI", population=123000),
    ])
    lookup = delineate_lookup(reg, MembershipTable.from_rows((l, "DET-CSA", "CSA") for l in reg.ids()), "CSA")
    dist = delineate_distance(reg, 40)
    diff = compare_partitions(lookup, dist)
    assert diff.changed == ["ann_arbor"]
    assert ("DET-CSA", ("ann_arbor", "detroit")) in diff.splits


def test_merge_diff_lists_smaller_metro():
    ids = [f"x{i}" for i in range(9)]
    big, small = frozenset(ids[:5]), frozenset(ids[5:7])
    p1 = Partition((MetroArea("BIG", big, "lookup"), MetroArea("SMALL", small, "lookup")), frozenset(ids[7:]))
    p2 = Partition((MetroArea("BIG", big | small, "lookup"),), frozenset(ids[7:]))
    diff = compare_partitions(p1, p2)
    assert set(diff.changed) == small
    assert diff.merges == (("BIG", ("BIG", "SMALL")),)


def test_compare_needs_same_localities():
    a = Partition((), frozenset({"a", "b"}))
    b = Partition((), frozenset({"a"}))
    with pytest.raises(GazetteerMismatch):
        compare_partitions(a, b)


def test_partition_invariants():
    with pytest.raises(ValueError):
        Partition((MetroArea("M", frozenset("ab"), "lookup"), MetroArea("N", frozenset("bc"), "lookup")))
    with pytest.raises(ValueError):
        MetroArea("M", frozenset(), "lookup")
    reg = _east([0, 10])
    with pytest.raises(GazetteerMismatch):
        check_partition(Partition((), frozenset("A")), reg)


def test_partition_csv_round_trip(tmp_path, rng):
    reg = _random_registry(rng, 50)
    p = delineate_distance(reg, 15, core_population=1_000_000)
    path = tmp_path / "p.csv"
    path.write_text(partition_csv(p, {"tool": "t"}))
    assert load_partition(path) == p
    lk = delineate_lookup(reg, MembershipTable.from_rows((l, "M", "MSA") for l in sorted(reg.ids())[:10]), "MSA")
    path.write_text(partition_csv(lk))
    assert load_partition(path) == lk
