"""Seeded synthetic corpora with their own expected values.

Each generator records what it built (``Fixture.expected``) while building,
so tests can compare pipeline output with the generator's bookkeeping rather
than with numbers re-derived by the code under test.

Profiles: ``mini-ny``, ``ny-membership``, ``hq`` (IBM / Creswick),
``geneva``, ``upton-berkeley``, ``random``, ``throughput``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterator

from ._io import atomic_write_text, render_csv
from .gazetteer import GAZETTEER_COLUMNS, Gazetteer, Institution, Locality, TravelTimeEdge, gazetteer_rows
from .records import Corpus, ingest_lines

PROFILES = ("mini-ny", "ny-membership", "hq", "geneva", "upton-berkeley", "random", "throughput")

_SYLLABLES = ["ba", "ke", "lo", "mi", "nu", "ra", "si", "to", "ve", "zo", "da", "fe", "gi", "ho", "ju", "pa"]


def synthetic_name(i: int) -> str:
    """Unique digit-free pronounceable name for index ``i``."""
    parts = []
    n = i
    for _ in range(3):
        parts.append(_SYLLABLES[n % len(_SYLLABLES)])
        n //= len(_SYLLABLES)
    while n:
        parts.append(_SYLLABLES[n % len(_SYLLABLES)])
        n //= len(_SYLLABLES)
    return "".join(parts).capitalize()


@dataclass
class Fixture:
    name: str
    localities: list[Locality]
    records: list[dict] = field(default_factory=list)
    memberships: list[tuple[str, str, str]] = field(default_factory=list)
    institutions: list[Institution] = field(default_factory=list)
    travel_times: list[TravelTimeEdge] = field(default_factory=list)
    aliases: list[tuple[str, str, str]] = field(default_factory=list)
    expected: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    line_source: Callable[[], Iterator[str]] | None = None

    def gazetteer(self) -> Gazetteer:
        aliases = {(a, c): lid for a, c, lid in self.aliases}
        return Gazetteer(self.localities, aliases)

    def lines(self) -> Iterator[str]:
        if self.line_source is not None:
            yield from self.line_source()
            return
        dumps = json.JSONEncoder(ensure_ascii=False, separators=(",", ":")).encode
        for rec in self.records:
            yield dumps(rec)

    def corpus(self) -> Corpus:
        return ingest_lines(self.lines(), source=f"{self.name}.jsonl")

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"corpus": out / "corpus.jsonl", "gazetteer": out / "gazetteer.csv"}
        with open(paths["corpus"], "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")
        atomic_write_text(paths["gazetteer"], render_csv(GAZETTEER_COLUMNS, gazetteer_rows(self.gazetteer())))
        if self.memberships:
            paths["memberships"] = out / "memberships.csv"
            atomic_write_text(paths["memberships"],
                              render_csv(["locality_id", "metro_id", "tier"], sorted(self.memberships)))
        if self.institutions:
            paths["institutions"] = out / "institutions.csv"
            rows = [(i.id, i.name, "|".join(sorted(i.alt_names)), i.hq_locality)
                    for i in sorted(self.institutions, key=lambda i: i.id)]
            atomic_write_text(paths["institutions"], render_csv(["id", "name", "alt_names", "hq_locality_id"], rows))
        if self.travel_times:
            paths["travel_times"] = out / "travel_times.csv"
            rows = [(e.a, e.b, f"{e.minutes:g}") for e in sorted(self.travel_times, key=lambda e: e.key)]
            atomic_write_text(paths["travel_times"], render_csv(["locality_a", "locality_b", "minutes"], rows))
        if self.aliases:
            paths["aliases"] = out / "aliases.csv"
            atomic_write_text(paths["aliases"], render_csv(["alias", "country", "locality_id"], sorted(self.aliases)))
        paths["expected"] = out / "expected.json"
        atomic_write_text(paths["expected"], json.dumps(self.expected, indent=2, sort_keys=True) + "\n")
        config = {
            "corpus_paths": [paths["corpus"].name],
            "gazetteer_path": paths["gazetteer"].name,
            "output_dir": "out",
            **{key: paths[k].name for k, key in (("memberships", "membership_path"),
                                                  ("institutions", "institution_path"),
                                                  ("travel_times", "travel_time_path"),
                                                  ("aliases", "aliases_path")) if k in paths},
            **self.config,
        }
        paths["config"] = out / "run.json"
        atomic_write_text(paths["config"], json.dumps(config, indent=2, sort_keys=True) + "\n")
        return paths


def _rec(rid: str, year: int, affs: list) -> dict:
    return {"id": rid, "year": year, "affiliations": [{"raw": a} if isinstance(a, str) else a for a in affs]}


# ---------------------------------------------------------------- mini-NY

# (id, name, type, admin, lat, lon) - the 25 settlements of the New York CSA
# top-25 table plus five further member localities
_NY_MEMBERS = [
    ("nyc", "New York City", "city", "NY", 40.7128, -74.0060),
    ("new_haven", "New Haven", "city", "CT", 41.3083, -72.9279),
    ("princeton", "Princeton", "borough", "NJ", 40.3573, -74.6672),
    ("rochester_ny", "Rochester", "town", "NY", 41.7800, -74.2500),
    ("new_brunswick", "New Brunswick", "city", "NJ", 40.4862, -74.4518),
    ("piscataway", "Piscataway", "township", "NJ", 40.5550, -74.4600),
    ("newark", "Newark", "city", "NJ", 40.7357, -74.1724),
    ("bethlehem", "Bethlehem", "city", "PA", 40.6259, -75.3705),
    ("west_haven", "West Haven", "city", "CT", 41.2706, -72.9470),
    ("east_hanover", "East Hanover", "township", "NJ", 40.8201, -74.3646),
    ("kenilworth", "Kenilworth", "borough", "NJ", 40.6765, -74.2907),
    ("hempstead", "Hempstead", "town", "NY", 40.7062, -73.6187),
    ("orange", "Orange", "township", "NJ", 40.7707, -74.2326),
    ("hyde_park", "Hyde Park", "town", "NY", 41.7846, -73.9332),
    ("hoboken", "Hoboken", "city", "NJ", 40.7440, -74.0324),
    ("hackensack", "Hackensack", "city", "NJ", 40.8859, -74.0435),
    ("raritan", "Raritan", "borough", "NJ", 40.5695, -74.6329),
    ("summit", "Summit", "city", "NJ", 40.7157, -74.3646),
    ("rahway", "Rahway", "city", "NJ", 40.6082, -74.2776),
    ("montclair", "Montclair", "township", "NJ", 40.8259, -74.2090),
    ("allentown", "Allentown", "city", "PA", 40.6023, -75.4714),
    ("bridgewater", "Bridgewater", "township", "NJ", 40.5940, -74.6049),
    ("ridgefield", "Ridgefield", "town", "CT", 41.2815, -73.4982),
    ("white_plains", "White Plains", "city", "NY", 41.0340, -73.7629),
    ("morristown", "Morristown", "town", "NJ", 40.7968, -74.4815),
    ("stamford", "Stamford", "city", "CT", 41.0534, -73.5387),
    ("yonkers", "Yonkers", "city", "NY", 40.9312, -73.8988),
    ("jersey_city", "Jersey City", "city", "NJ", 40.7178, -74.0431),
    ("paterson", "Paterson", "city", "NJ", 40.9168, -74.1718),
    ("edison", "Edison", "township", "NJ", 40.5187, -74.4121),
]

_OUTSIDE = [
    ("tokyo", "Tokyo", "city", None, "Japan", 35.6762, 139.6503),
    ("beijing", "Beijing", "city", None, "China", 39.9042, 116.4074),
    ("london", "London", "city", None, "UK", 51.5074, -0.1278),
    ("rochester_mn", "Rochester", "city", "MN", "USA", 44.0121, -92.4802),
    ("berkeley", "Berkeley", "city", "CA", "USA", 37.8715, -122.2730),
]

_ZIP = {"NY": "100", "NJ": "070", "CT": "065", "PA": "180", "MN": "559", "CA": "947"}


def _us_raw(inst: str, loc: Locality, i: int) -> str:
    name = "New York" if loc.id == "nyc" else loc.name
    return f"{inst}, {name}, {loc.admin_name} {_ZIP[loc.admin_name]}{i % 100:02d}, USA"


def _raw_for(loc: Locality, inst: str, i: int = 0) -> str:
    if loc.country == "USA":
        return _us_raw(inst, loc, i)
    return f"{inst}, {loc.name}, {loc.country}"


def mini_ny(seed: int = 0) -> Fixture:
    """30-locality metro engineered to integer sum 100 and dedup 92.

    84 papers touch exactly one member locality (some also an outside city),
    8 papers touch exactly two member localities, and a handful of papers
    touch outside cities only.
    """
    rng = random.Random(seed)
    locs = [Locality(i, n, "USA", la, lo, admin_name=a, settlement_type=t) for i, n, t, a, la, lo in _NY_MEMBERS]
    locs += [Locality(i, n, c, la, lo, admin_name=a, settlement_type=t) for i, n, t, a, c, la, lo in _OUTSIDE]
    by_id = {l.id: l for l in locs}
    member_ids = [m[0] for m in _NY_MEMBERS]
    outside_ids = [o[0] for o in _OUTSIDE]

    # every member gets one paper, the remaining 54 follow a 1/rank profile
    singles = list(member_ids)
    weights = [1.0 / (rank + 1) for rank in range(len(member_ids))]
    singles += rng.choices(member_ids, weights=weights, k=84 - len(member_ids))
    pairs = rng.sample(list(combinations(member_ids[:12], 2)), 8)

    records, integer = [], {m: 0 for m in member_ids}
    fractional = Fraction(0)
    n = 0
    for loc_id in singles:
        n += 1
        affs = [_raw_for(by_id[loc_id], f"{by_id[loc_id].name} Res Inst", n)]
        share = Fraction(1)
        if rng.random() < 0.25:
            other = rng.choice([o for o in outside_ids if o != "rochester_mn"])
            affs.append(_raw_for(by_id[other], "Partner Univ", n))
            share = Fraction(1, 2)
        records.append(_rec(f"NY{n:04d}", 2016, affs))
        integer[loc_id] += 1
        fractional += share
    for a, b in pairs:
        n += 1
        affs = [_raw_for(by_id[a], f"{by_id[a].name} Res Inst", n), _raw_for(by_id[b], f"{by_id[b].name} Med Ctr", n)]
        records.append(_rec(f"NY{n:04d}", 2016, affs))
        integer[a] += 1
        integer[b] += 1
        fractional += 1
    # outside-only papers, including a Tokyo-Beijing pair and a Rochester MN paper
    records.append(_rec("OUT0001", 2016, [_raw_for(by_id["tokyo"], "Univ Tokyo"), _raw_for(by_id["beijing"], "Peking Univ")]))
    records.append(_rec("OUT0002", 2016, [_raw_for(by_id["rochester_mn"], "Mayo Clin", 1)]))
    records.append(_rec("OUT0003", 2015, [_raw_for(by_id["london"], "UCL"), _raw_for(by_id["berkeley"], "Univ Calif Berkeley", 3)]))

    memberships = [(m, "NY-CSA", "CSA") for m in member_ids]
    expected = {
        "metro_id": "NY-CSA",
        "member_count": len(member_ids),
        "integer_sum": sum(integer.values()),
        "dedup": len(singles) + len(pairs),
        "fractional_distinct": [fractional.numerator, fractional.denominator],
        "ratio_display": "92.0%",
        "locality_integer": integer,
        "cross_locality_papers": len(pairs),
    }
    return Fixture(
        "mini-ny", locs, records, memberships,
        aliases=[("New York", "USA", "nyc")],
        expected=expected,
        config={"strategy": "lookup", "tier": "CSA", "regimes": ["integer", "integer_sum", "dedup", "fractional"],
                "metro": "NY-CSA"},
    )


# ---------------------------------------------------------------- NY membership table


def ny_membership(seed: int = 0) -> Fixture:
    """NYC plus 466 further MSA localities plus 241 CSA-only localities (708 in the CSA)."""
    rng = random.Random(seed)
    locs = [Locality("nyc", "New York City", "USA", 40.7128, -74.0060, admin_name="NY", settlement_type="city")]
    memberships = [("nyc", "NY-MSA", "MSA"), ("nyc", "NY-CSA", "CSA")]
    types = ["city", "town", "borough", "township"]
    for i in range(466 + 241):
        lid = f"ny{i:04d}"
        in_msa = i < 466
        lat = 40.7128 + rng.uniform(-0.6, 0.6) * (1 if in_msa else 2)
        lon = -74.0060 + rng.uniform(-0.7, 0.7) * (1 if in_msa else 2)
        locs.append(Locality(lid, synthetic_name(i), "USA", round(lat, 5), round(lon, 5),
                             admin_name=rng.choice(["NY", "NJ", "CT", "PA"]), settlement_type=rng.choice(types)))
        if in_msa:
            memberships.append((lid, "NY-MSA", "MSA"))
        memberships.append((lid, "NY-CSA", "CSA"))
    # a few localities outside both tiers
    for j in range(5):
        locs.append(Locality(f"out{j}", synthetic_name(5000 + j), "USA", 35.0 + j, -90.0, admin_name="TN"))
    return Fixture(
        "ny-membership", locs, memberships=memberships,
        expected={"csa_members": 708, "msa_members": 467, "outside": 5},
        config={"strategy": "lookup", "tier": "CSA"},
    )


# ---------------------------------------------------------------- headquarters mismatch


def hq(seed: int = 0) -> Fixture:
    """IBM (876 papers, 30 from Armonk) and University of Melbourne (49 Creswick papers)."""
    rng = random.Random(seed)
    locs = [
        Locality("armonk", "Armonk", "USA", 41.1265, -73.7140, admin_name="NY", settlement_type="hamlet"),
        Locality("yorktown", "Yorktown Heights", "USA", 41.2709, -73.7776, admin_name="NY",
                 alt_names=frozenset({"Yorktown Hts"}), settlement_type="census_designated_place"),
        Locality("san_jose", "San Jose", "USA", 37.3382, -121.8863, admin_name="CA", settlement_type="city"),
        Locality("san_diego", "San Diego", "USA", 32.7157, -117.1611, admin_name="CA", settlement_type="city"),
        Locality("ruschlikon", "Ruschlikon", "Switzerland", 47.3070, 8.5560, settlement_type="other"),
        Locality("melbourne", "Melbourne", "Australia", -37.8136, 144.9631, admin_name="VIC", settlement_type="city"),
        Locality("creswick", "Creswick", "Australia", -37.4240, 143.8940, admin_name="VIC", settlement_type="town"),
    ]
    insts = [
        Institution("ibm", "IBM Corp", "armonk", frozenset({"IBM", "International Business Machines"})),
        Institution("unimelb", "Univ Melbourne", "melbourne", frozenset({"University of Melbourne"})),
    ]
    sites = [
        ("Thomas J Watson Res Ctr, Yorktown Hts, NY 10598, USA", 500),
        ("Almaden Res Ctr, San Jose, CA 95120, USA", 220),
        ("San Diego, CA 92121, USA", 60),
        ("Zurich Res Lab, Ruschlikon, Switzerland", 66),
    ]
    records = []
    for i in range(30):
        records.append(_rec(f"IBM{i:04d}", 2016, [f"IBM Corp, Armonk, NY 10504, USA"]))
    n = 30
    for tail, count in sites:
        for _ in range(count):
            affs = [f"IBM Corp, {tail}"]
            if rng.random() < 0.3:
                affs.append(f"Partner Univ, {synthetic_name(rng.randrange(3))}, Germany")
            records.append(_rec(f"IBM{n:04d}", 2016, affs))
            n += 1
    for i in range(49):
        records.append(_rec(f"UM-C{i:03d}", 2016, ["Univ Melbourne, Sch Ecosyst & Forest Sci, Creswick, Vic 3363, Australia"]))
    for i in range(200):
        records.append(_rec(f"UM-M{i:03d}", 2016, ["Univ Melbourne, Sch Phys, Melbourne, Vic 3010, Australia"]))
    for k in range(3):
        locs.append(Locality(f"de{k}", synthetic_name(k), "Germany", 50.0 + k, 8.0 + k))
    return Fixture(
        "hq", locs, records, institutions=insts,
        expected={"ibm": {"total": 876, "at_hq": 30, "hq_share_display": "3.4%"},
                  "unimelb": {"total": 249, "at_hq": 200, "off_hq": 49,
                              "off_hq_ids": [f"UM-C{i:03d}" for i in range(49)]}},
    )


# ---------------------------------------------------------------- Geneva


def geneva(seed: int = 0) -> Fixture:
    """CERN, University of Geneva and WHO with 340 / 45 / 0 joint papers."""
    rng = random.Random(seed)
    locs = [
        Locality("geneva", "Geneva", "Switzerland", 46.2044, 6.1432, alt_names=frozenset({"Geneve", "Genève"}),
                 population=203856, settlement_type="city"),
        Locality("meyrin", "Meyrin", "Switzerland", 46.2340, 6.0800, population=26000, settlement_type="town"),
        Locality("lausanne", "Lausanne", "Switzerland", 46.5197, 6.6323, population=140000, settlement_type="city"),
    ]
    insts = [
        Institution("cern", "CERN", "meyrin", frozenset({"European Organization for Nuclear Research"})),
        Institution("unige", "Univ Geneva", "geneva", frozenset({"University of Geneva"})),
        Institution("who", "World Hlth Org", "geneva", frozenset({"WHO"})),
        Institution("epfl", "Ecole Polytech Fed Lausanne", "lausanne", frozenset({"EPFL"})),
    ]
    cern = "CERN, Geneva, Switzerland"
    unige = "Univ Geneva, Dept Phys, Geneva, Switzerland"
    who = "World Hlth Org, Geneva, Switzerland"
    records = []
    for i in range(340):
        records.append(_rec(f"G-CU{i:04d}", 2016, [cern, unige]))
    for i in range(45):
        records.append(_rec(f"G-UW{i:04d}", 2016, [unige, who]))
    meyrin_reports = 0
    for i in range(1216 - 340):
        if rng.random() < 0.05:
            meyrin_reports += 1
            affs = ["CERN, Meyrin, Switzerland"]
        else:
            affs = [cern]
        if rng.random() < 0.2:
            affs.append("Ecole Polytech Fed Lausanne, Lausanne, Switzerland")
        records.append(_rec(f"G-C{i:04d}", 2016, affs))
    for i in range(4406 - 340 - 45):
        records.append(_rec(f"G-U{i:04d}", 2016, [unige]))
    for i in range(1004 - 45):
        records.append(_rec(f"G-W{i:04d}", 2016, [who]))
    return Fixture(
        "geneva", locs, records, institutions=insts,
        expected={"cells": {"cern|unige": 340, "unige|who": 45, "cern|who": 0},
                  "totals": {"cern": 1216, "unige": 4406, "who": 1004},
                  "cern_meyrin_reports": meyrin_reports},
        config={"strategy": "distance", "threshold_km": 40, "city": "geneva"},
    )


# ---------------------------------------------------------------- Upton-Berkeley


def upton_berkeley(seed: int = 0) -> Fixture:
    """Two CSAs whose only cross-metro papers join Upton and Berkeley (228 of them)."""
    rng = random.Random(seed)
    ny = [("upton", "Upton", "NY", 40.8696, -72.8868), ("nyc", "New York City", "NY", 40.7128, -74.0060),
          ("stony_brook", "Stony Brook", "NY", 40.9257, -73.1409), ("princeton", "Princeton", "NJ", 40.3573, -74.6672)]
    sf = [("berkeley", "Berkeley", "CA", 37.8715, -122.2730), ("san_francisco", "San Francisco", "CA", 37.7749, -122.4194),
          ("stanford", "Stanford", "CA", 37.4275, -122.1697), ("oakland", "Oakland", "CA", 37.8044, -122.2712)]
    locs = [Locality(i, n, "USA", la, lo, admin_name=a, settlement_type="city") for i, n, a, la, lo in ny + sf]
    locs.append(Locality("chicago", "Chicago", "USA", 41.8781, -87.6298, admin_name="IL", settlement_type="city"))
    by_id = {l.id: l for l in locs}
    memberships = [(l[0], "NY-CSA", "CSA") for l in ny] + [(l[0], "SF-CSA", "CSA") for l in sf]

    def raw(lid, n):
        loc = by_id[lid]
        name = "New York" if lid == "nyc" else loc.name
        return f"{loc.name} Lab, {name}, {loc.admin_name} 0{n % 9000 + 1000}, USA"

    records = []
    n = 0
    for _ in range(228):
        n += 1
        records.append(_rec(f"UB{n:05d}", 2016, [raw("upton", n), raw("berkeley", n)]))
    within = 0
    for metro in (ny, sf):
        ids = [m[0] for m in metro]
        for _ in range(150):
            n += 1
            k = rng.choice((1, 1, 2, 3))
            chosen = rng.sample(ids, k)
            if rng.random() < 0.2:
                chosen.append("chicago")
            records.append(_rec(f"UB{n:05d}", 2016, [raw(c, n) for c in chosen]))
            within += 1
    return Fixture(
        "upton-berkeley", locs, records, memberships,
        aliases=[("New York", "USA", "nyc")],
        expected={"cell": 228, "links": {"upton|berkeley": 228}, "pair": ["NY-CSA", "SF-CSA"]},
        config={"strategy": "lookup", "tier": "CSA", "pair": ["NY-CSA", "SF-CSA"]},
    )


# ---------------------------------------------------------------- random


def random_gazetteer(rng: random.Random, n: int, spread_deg: float = 1.0, with_population: bool = True) -> list[Locality]:
    """``n`` localities around a few centres in a small region."""
    centres = [(rng.uniform(-50, 50), rng.uniform(-120, 120)) for _ in range(max(1, n // 25))]
    locs = []
    for i in range(n):
        clat, clon = rng.choice(centres)
        lat = min(90.0, max(-90.0, clat + rng.gauss(0, spread_deg)))
        lon = clon + rng.gauss(0, spread_deg)
        locs.append(Locality(
            f"L{i:05d}", synthetic_name(i), "Testland", round(lat, 6), round(lon, 6),
            population=rng.randint(100, 2_000_000) if with_population else None,
            settlement_type=rng.choice(["city", "town", "village"]),
        ))
    return locs


def random_papers(rng: random.Random, locality_ids: list[str], n_papers: int, max_affiliations: int = 6,
                  start: int = 0) -> list[dict]:
    """Structured, pre-resolved records with repeated localities allowed."""
    records = []
    for p in range(start, start + n_papers):
        k = rng.randint(1, max_affiliations)
        affs = []
        for j in range(k):
            lid = rng.choice(locality_ids)
            affs.append({"institution": f"Inst {j}", "locality": lid, "country": "Testland", "locality_id": lid})
        records.append(_rec(f"P{p:07d}", rng.randint(2010, 2020), affs))
    return records


def random_corpus(seed: int = 0, n_papers: int = 1000, n_localities: int = 50, max_affiliations: int = 6) -> Fixture:
    rng = random.Random(seed)
    locs = random_gazetteer(rng, n_localities)
    ids = [l.id for l in locs]
    records = random_papers(rng, ids, n_papers, max_affiliations)
    # random membership: about a third singletons, the rest in a handful of metros
    memberships = []
    n_metros = max(1, n_localities // 8)
    for lid in ids:
        if rng.random() < 0.66:
            memberships.append((lid, f"M{rng.randrange(n_metros):03d}", "custom"))
    return Fixture("random", locs, records, memberships,
                   expected={"papers": n_papers}, config={"strategy": "lookup", "tier": "custom"})


# ---------------------------------------------------------------- throughput


def throughput(seed: int = 0, n_records: int = 1_000_000, n_localities: int = 2000) -> Fixture:
    """Large raw-string corpus for the throughput benchmark; records are streamed."""
    rng = random.Random(seed)
    locs = random_gazetteer(rng, n_localities, spread_deg=0.5)
    raws = [[f"{synthetic_name(10_000 + k)} Univ, Dept {d}, {loc.name}, Testland" for k, d in ((0, "Phys"), (1, "Chem"), (2, "Med"))]
            for loc in locs]

    def source():
        r = random.Random(seed + 1)
        dumps = json.JSONEncoder(separators=(",", ":")).encode
        for p in range(n_records):
            k = min(6, 1 + int(r.expovariate(0.7)))
            affs = [{"raw": raws[r.randrange(n_localities)][r.randrange(3)]} for _ in range(k)]
            yield dumps({"id": f"T{p:08d}", "year": 2000 + p % 20, "affiliations": affs})

    return Fixture("throughput", locs, line_source=source, expected={"records": n_records},
                   config={"strategy": "distance", "threshold_km": 40})


def make(profile: str, seed: int = 0, **kwargs) -> Fixture:
    builders = {
        "mini-ny": mini_ny,
        "ny-membership": ny_membership,
        "hq": hq,
        "geneva": geneva,
        "upton-berkeley": upton_berkeley,
        "random": random_corpus,
        "throughput": throughput,
    }
    if profile not in builders:
        raise ValueError(f"unknown fixture profile {profile!r}; choose from {', '.join(PROFILES)}")
    return builders[profile](seed, **kwargs)
