"""Co-authorship dyads between localities, metros, or institutions of one city."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Mapping

from ._io import fold, format_number, render_csv
from .counting import _add, _mapping, prepare
from .delineation import Partition
from .errors import UnknownMetro
from .gazetteer import InstitutionRegistry
from .records import Corpus


def pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class DyadMatrix:
    """Symmetric pair weights keyed in canonical (sorted) order."""

    unit_kind: str
    regime: str
    cells: Mapping[tuple[str, str], float]
    include_diagonal: bool = True
    paper_total: int = 0
    corpus_hash: str | None = None
    partition_hash: str | None = None

    def __post_init__(self):
        for a, b in self.cells:
            if a > b:
                raise ValueError(f"cell key {(a, b)} is not in canonical order")
        object.__setattr__(self, "cells", dict(sorted(self.cells.items())))

    def get(self, a: str, b: str) -> float:
        return self.cells.get(pair_key(a, b), 0)

    def units(self) -> list[str]:
        return sorted({u for pair in self.cells for u in pair})

    def to_csv(self, meta: dict | None = None) -> str:
        rows = [(a, b, format_number(w), self.regime) for (a, b), w in self.cells.items()]
        header = {
            **(meta or {}),
            "corpus_hash": self.corpus_hash,
            "unit_kind": self.unit_kind,
            "include_diagonal": str(self.include_diagonal).lower(),
            "paper_total": self.paper_total,
        }
        if self.partition_hash:
            header["partition_hash"] = self.partition_hash
        return render_csv(["unit_a", "unit_b", "weight", "regime"], rows, header)


def dyad_matrix(
    corpus: Corpus,
    partition: Partition | None = None,
    regime: str = "integer",
    include_diagonal: bool = True,
    year_range=None,
    tolerance: float = 0.0,
    threads: int = 1,
) -> DyadMatrix:
    """Pairwise collaboration counts between the units each paper touches.

    Integer: +1 per unordered unit pair per paper; with ``include_diagonal`` a
    metro also gets +1 on its diagonal when the paper has two or more distinct
    localities inside it. Fractional: each pair of a paper spanning k units
    gets 1/C(k, 2), so every collaborative paper carries total weight 1.
    Diagonal cells are not produced in the fractional regime.
    """
    if regime not in ("integer", "fractional"):
        raise ValueError("regime must be 'integer' or 'fractional'")
    prep = prepare(corpus, year_range, tolerance)
    unit_of = _mapping(partition, prep.papers)

    def keys(chunk):
        for locs in chunk:
            distinct = set(locs)
            if unit_of is None:
                units = sorted(distinct)
                inner = ()
            else:
                per_unit = Counter(unit_of[l] for l in distinct)
                units = sorted(per_unit)
                inner = [u for u, n in per_unit.items() if n >= 2]
            k = len(units)
            if regime == "integer":
                if k >= 2:
                    yield from combinations(units, 2)
                if include_diagonal:
                    for u in inner:
                        yield (u, u)
            elif k >= 2:
                den = k * (k - 1) // 2
                for pair in combinations(units, 2):
                    yield (pair, den)

    def work(chunk):
        return Counter(keys(chunk))

    tally = fold(prep.papers, work, _add, threads)
    if regime == "integer":
        cells = dict(tally)
    else:
        exact: dict = {}
        for (pair, den), num in tally.items():
            exact[pair] = exact.get(pair, Fraction(0)) + Fraction(num, den)
        cells = {pair: float(v) for pair, v in exact.items()}
    return DyadMatrix(
        "locality" if partition is None else "metro", regime, cells,
        include_diagonal and regime == "integer", len(prep.papers), prep.corpus_hash,
        None if partition is None else partition.fingerprint,
    )


@dataclass(frozen=True)
class LinkExpansion:
    metro_pair: tuple[str, str]
    locality_links: Mapping[tuple[str, str], int]
    metro_cell: int
    multi_locality_papers: int

    @property
    def link_total(self) -> int:
        return sum(self.locality_links.values())

    @property
    def note(self) -> str:
        if self.multi_locality_papers == 0:
            return "locality links sum to the metro cell"
        return (
            f"{self.multi_locality_papers} papers touch two or more localities in one metro; "
            f"links sum to {self.link_total} against a metro cell of {self.metro_cell}"
        )

    def to_csv(self, meta: dict | None = None) -> str:
        rows = [(a, b, n) for (a, b), n in sorted(self.locality_links.items())]
        header = {**(meta or {}), "metro_pair": "|".join(self.metro_pair),
                  "metro_cell": self.metro_cell, "note": self.note}
        return render_csv(["locality_a", "locality_b", "joint_papers"], rows, header)


def expand_links(corpus: Corpus, partition: Partition, metro_pair: tuple[str, str],
                 year_range=None, tolerance: float = 0.0) -> LinkExpansion:
    """Locality-level links behind one metro dyad.

    For two different metros a link pairs one locality from each; for a
    diagonal pair it joins two distinct localities of the same metro. Link
    keys keep the first metro's locality first.
    """
    m1, m2 = metro_pair
    members = partition.members_of
    for m in (m1, m2):
        if m not in members:
            raise UnknownMetro(f"unknown metro {m!r}")
    prep = prepare(corpus, year_range, tolerance)
    _mapping(partition, prep.papers)
    in1, in2 = members[m1], members[m2]
    links: Counter = Counter()
    cell = 0
    multi = 0
    for locs in prep.papers:
        distinct = set(locs)
        a = sorted(distinct & in1)
        if m1 == m2:
            if len(a) < 2:
                continue
            cell += 1
            links.update(combinations(a, 2))
            if len(a) > 2:
                multi += 1
            continue
        b = sorted(distinct & in2)
        if not a or not b:
            continue
        cell += 1
        if len(a) > 1 or len(b) > 1:
            multi += 1
        for x in a:
            for y in b:
                links[(x, y)] += 1
    return LinkExpansion((m1, m2), dict(sorted(links.items())), cell, multi)


def intra_city_matrix(
    corpus: Corpus,
    city: str,
    inst_registry: InstitutionRegistry,
    partition: Partition,
    year_range=None,
) -> DyadMatrix:
    """Institution-by-institution joint papers inside one locality or metro.

    Only affiliations located in the city count. Every pair of institutions
    headquartered there (or seen there) gets a cell, zero included.
    """
    members = partition.members_of.get(city)
    if members is None:
        raise UnknownMetro(f"{city!r} is neither a metro nor a locality of the partition")
    cells: Counter = Counter()
    seen: set[str] = set()
    papers = 0
    memo: dict = {}
    for rec in corpus.records:
        if year_range is not None and not year_range[0] <= rec.year <= year_range[1]:
            continue
        local = set()
        touched = False
        for entry in rec.affiliations:
            if entry.resolved_locality not in members:
                continue
            touched = True
            hit = memo.get(entry, memo)
            if hit is memo:
                hit = inst_registry.match_entry(entry)
                memo[entry] = hit
            if hit is not None:
                local.add(hit)
        if not touched:
            continue
        papers += 1
        seen |= local
        cells.update(combinations(sorted(local), 2))
    units = sorted(set(inst_registry.located_in(members)) | seen)
    full = {pair: cells.get(pair, 0) for pair in combinations(units, 2)}
    return DyadMatrix("institution", "integer", full, False, papers, corpus.fingerprint, partition.fingerprint)
