"""Locality and institution registries, membership tables, travel-time edges.

Resolution is exact after normalization (case-fold, diacritics, whitespace);
there is no fuzzy matching. Curated aliases are the only correction channel.
"""

from __future__ import annotations

import csv
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from . import regions
from ._io import gc_paused
from .errors import DanglingReference, DuplicateKey, SchemaError
from .records import AffiliationEntry, Corpus, PublicationRecord

EARTH_RADIUS_KM = 6371.0088

SETTLEMENT_TYPES = frozenset(
    {"city", "town", "borough", "township", "village", "hamlet",
     "census_designated_place", "district", "other"}
)
TIERS = ("MSA", "CSA", "custom")

NOT_FOUND = "not_found"
AMBIGUOUS = "ambiguous_name"
MISSING_LOCALITY = "missing_locality"
UNKNOWN_ID = "unknown_locality_id"


@dataclass(frozen=True, slots=True)
class Locality:
    id: str
    name: str
    country: str
    lat: float
    lon: float
    admin_name: str | None = None
    alt_names: frozenset[str] = frozenset()
    population: int | None = None
    settlement_type: str = "other"

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of [-90, 90]")
        if not -180.0 < self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of (-180, 180]")
        if self.population is not None and self.population < 0:
            raise ValueError("population must be non-negative")
        if self.settlement_type not in SETTLEMENT_TYPES:
            raise ValueError(f"unknown settlement type {self.settlement_type!r}")


@dataclass(frozen=True, slots=True)
class Institution:
    id: str
    name: str
    hq_locality: str
    alt_names: frozenset[str] = frozenset()


@dataclass(frozen=True, slots=True)
class TravelTimeEdge:
    a: str
    b: str
    minutes: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("travel-time edge joins a locality to itself")
        if not self.minutes > 0:
            raise ValueError("minutes must be positive")

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


@dataclass(frozen=True)
class Unresolved:
    reason: str
    detail: str = ""

    def __str__(self):
        return f"{self.reason}: {self.detail}" if self.detail else self.reason


def _key(name: str, admin: str | None, country: str) -> tuple:
    return (regions.normalize(name), regions.admin_key(country, admin), regions.canonical_country(country))


class Gazetteer:
    """Immutable locality registry with exact-match indexes."""

    def __init__(self, localities: Iterable[Locality], aliases: Mapping[tuple[str, str], str] | None = None):
        self.localities: dict[str, Locality] = {}
        self._exact: dict[tuple, str] = {}
        self._by_name: dict[tuple, list[str]] = defaultdict(list)
        self._alt_exact: dict[tuple, list[str]] = defaultdict(list)
        self._alt_by_name: dict[tuple, list[str]] = defaultdict(list)
        for loc in localities:
            if loc.id in self.localities:
                raise DuplicateKey(f"duplicate locality id {loc.id!r}")
            key = _key(loc.name, loc.admin_name, loc.country)
            if key in self._exact:
                raise DuplicateKey(
                    f"localities {self._exact[key]!r} and {loc.id!r} share (name, admin, country)"
                )
            self.localities[loc.id] = loc
            self._exact[key] = loc.id
            self._by_name[(key[0], key[2])].append(loc.id)
            # spellings that normalise alike ("Genève", "Geneve") count once
            for akey in {_key(alt, loc.admin_name, loc.country) for alt in loc.alt_names}:
                self._alt_exact[akey].append(loc.id)
                if loc.id not in self._alt_by_name[(akey[0], akey[2])]:
                    self._alt_by_name[(akey[0], akey[2])].append(loc.id)
        for table in (self._by_name, self._alt_exact, self._alt_by_name):
            for ids in table.values():
                ids.sort()
        self.aliases: dict[tuple[str, str], str] = {}
        for (alias, country), loc_id in (aliases or {}).items():
            if loc_id not in self.localities:
                raise DanglingReference(f"alias {alias!r} points at unknown locality {loc_id!r}")
            self.aliases[(regions.normalize(alias), regions.canonical_country(country))] = loc_id
        self._cache: dict[tuple, str | Unresolved] = {}

    def __len__(self):
        return len(self.localities)

    def __contains__(self, loc_id):
        return loc_id in self.localities

    def __getitem__(self, loc_id) -> Locality:
        return self.localities[loc_id]

    def __iter__(self):
        return iter(self.localities.values())

    def ids(self) -> frozenset[str]:
        return frozenset(self.localities)

    def has_population(self) -> bool:
        return all(loc.population is not None for loc in self.localities.values())

    def lookup(self, name: str, admin: str | None, country: str) -> str | Unresolved:
        if not name or not name.strip():
            return Unresolved(MISSING_LOCALITY)
        key = _key(name, admin, country)
        cached = self._cache.get(key)
        if cached is None:
            cached = self._lookup(key)
            self._cache[key] = cached
        return cached

    def _lookup(self, key) -> str | Unresolved:
        name, admin, country = key
        alias = self.aliases.get((name, country))
        if alias is not None:
            return alias
        for exact, by_name in ((self._exact, self._by_name), (self._alt_exact, self._alt_by_name)):
            if admin is not None:
                hit = exact.get(key)
                if isinstance(hit, list):
                    if len(hit) == 1:
                        return hit[0]
                    if len(hit) > 1:
                        return Unresolved(AMBIGUOUS, f"{name!r} matches {', '.join(hit)}")
                elif hit is not None:
                    return hit
            ids = by_name.get((name, country), ())
            if len(ids) == 1:
                return ids[0]
            if len(ids) > 1:
                return Unresolved(AMBIGUOUS, f"{name!r} matches {', '.join(ids)}")
        return Unresolved(NOT_FOUND, f"{name!r} in {country!r}")


def resolve(entry: AffiliationEntry, registry: Gazetteer) -> str | Unresolved:
    """Map a parsed affiliation to a locality id, or say why not."""
    if entry.resolved_locality is not None:
        if entry.resolved_locality in registry:
            return entry.resolved_locality
        return Unresolved(UNKNOWN_ID, entry.resolved_locality)
    if not entry.country_name:
        return Unresolved(MISSING_LOCALITY, "entry was not parsed")
    return registry.lookup(entry.locality_name, entry.admin_name, entry.country_name)


def resolve_corpus(corpus: Corpus, registry: Gazetteer) -> Corpus:
    """Set ``resolved_locality`` everywhere possible and rebuild ``unresolved``.

    Parse failures already recorded are kept; entries already carrying a
    locality id are checked against the registry.
    """
    with gc_paused():
        return _resolve_corpus(corpus, registry)


def _resolve_corpus(corpus: Corpus, registry: Gazetteer) -> Corpus:
    prior = {(rid, idx): reason for rid, idx, reason in corpus.unresolved}
    # keyed by object identity: parsed entries are shared across records
    memo: dict[int, AffiliationEntry | Unresolved] = {}
    records = []
    unresolved = []
    for rec in corpus.records:
        new_affs = []
        changed = False
        for idx, entry in enumerate(rec.affiliations):
            if not entry.parsed:
                new_affs.append(entry)
                unresolved.append((rec.id, idx, prior.get((rec.id, idx), "parse_failure")))
                continue
            out = memo.get(id(entry))
            if out is None:
                hit = resolve(entry, registry)
                out = hit if isinstance(hit, Unresolved) else (
                    entry if entry.resolved_locality == hit else replace(entry, resolved_locality=hit)
                )
                memo[id(entry)] = out
            if isinstance(out, Unresolved):
                if entry.resolved_locality is not None:
                    entry = replace(entry, resolved_locality=None)
                    changed = True
                new_affs.append(entry)
                unresolved.append((rec.id, idx, str(out)))
            else:
                changed = changed or out is not entry
                new_affs.append(out)
        records.append(PublicationRecord(rec.id, rec.year, tuple(new_affs)) if changed else rec)
    return Corpus(tuple(records), tuple(unresolved), corpus.quarantine)


# ---------------------------------------------------------------- distance


def distance_km(a: Locality, b: Locality) -> float:
    """Haversine great-circle distance on the mean Earth radius."""
    return haversine_km(a.lat, a.lon, b.lat, b.lon)


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def pairwise_km(lat: np.ndarray, lon: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Vectorised haversine for index pairs (i, j) into the coordinate arrays."""
    p = np.radians(lat)
    lm = np.radians(lon)
    dphi = p[j] - p[i]
    dlmb = lm[j] - lm[i]
    h = np.sin(dphi / 2) ** 2 + np.cos(p[i]) * np.cos(p[j]) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


# ---------------------------------------------------------------- loaders


def _read_rows(path, required: list[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if not line.startswith("#")]
    reader = csv.DictReader(lines)
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(f"{os.path.basename(path)}: missing columns {', '.join(missing)}")
    # row numbers count the header as row 1
    return [(n, row) for n, row in enumerate(reader, start=2)]


def _split_alts(text: str | None) -> frozenset[str]:
    return frozenset(a.strip() for a in (text or "").split("|") if a.strip())


def load_gazetteer(path, aliases_path=None) -> Gazetteer:
    cols = ["id", "name", "alt_names", "admin", "country", "lat", "lon", "population", "settlement_type"]
    locs = []
    seen: dict[str, int] = {}
    seen_keys: dict[tuple, int] = {}
    for n, row in _read_rows(path, cols):
        lid = (row["id"] or "").strip()
        if not lid or not (row["name"] or "").strip() or not (row["country"] or "").strip():
            raise SchemaError(f"row {n}: id, name and country are required", [n])
        if lid in seen:
            raise DuplicateKey(f"rows {seen[lid]} and {n}: duplicate id {lid!r}", [seen[lid], n])
        try:
            pop_text = (row["population"] or "").strip()
            loc = Locality(
                id=lid,
                name=row["name"].strip(),
                country=row["country"].strip(),
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                admin_name=(row["admin"] or "").strip() or None,
                alt_names=_split_alts(row["alt_names"]),
                population=int(pop_text) if pop_text else None,
                settlement_type=(row["settlement_type"] or "other").strip() or "other",
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"row {n}: {exc}", [n]) from None
        key = _key(loc.name, loc.admin_name, loc.country)
        if key in seen_keys:
            raise DuplicateKey(
                f"rows {seen_keys[key]} and {n}: duplicate (name, admin, country)", [seen_keys[key], n]
            )
        seen[lid] = n
        seen_keys[key] = n
        locs.append(loc)
    aliases = load_aliases(path=aliases_path) if aliases_path else None
    return Gazetteer(locs, aliases)


def load_aliases(path) -> dict[tuple[str, str], str]:
    """Alias CSV ``alias,country,locality_id``."""
    out = {}
    for n, row in _read_rows(path, ["alias", "country", "locality_id"]):
        key = (row["alias"].strip(), row["country"].strip())
        if key in out:
            raise DuplicateKey(f"row {n}: duplicate alias {key}", [n])
        out[key] = row["locality_id"].strip()
    return out


@dataclass(frozen=True)
class MembershipTable:
    """locality id -> {tier: metro id}; at most one metro per tier."""

    entries: Mapping[str, Mapping[str, str]] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, str, str]]) -> "MembershipTable":
        """Build from ``(locality_id, metro_id, tier)`` rows."""
        entries: dict[str, dict[str, str]] = {}
        for loc, metro, tier in rows:
            if tier not in TIERS:
                raise SchemaError(f"tier must be one of {', '.join(TIERS)}")
            tiers = entries.setdefault(loc, {})
            if tier in tiers and tiers[tier] != metro:
                raise DuplicateKey(f"{loc!r} listed twice for {tier}")
            tiers[tier] = metro
        return cls(entries)

    def tier(self, tier: str) -> dict[str, str]:
        return {loc: tiers[tier] for loc, tiers in self.entries.items() if tier in tiers}

    def __len__(self):
        return sum(len(t) for t in self.entries.values())


def load_memberships(path, registry: Gazetteer | None = None) -> MembershipTable:
    entries: dict[str, dict[str, str]] = {}
    first_row: dict[tuple, int] = {}
    for n, row in _read_rows(path, ["locality_id", "metro_id", "tier"]):
        loc, metro, tier = (row[c].strip() for c in ("locality_id", "metro_id", "tier"))
        if tier not in TIERS:
            raise SchemaError(f"row {n}: tier must be one of {', '.join(TIERS)}", [n])
        if not loc or not metro:
            raise SchemaError(f"row {n}: locality_id and metro_id are required", [n])
        if registry is not None and loc not in registry:
            raise DanglingReference(f"row {n}: unknown locality id {loc!r}", [n])
        if (loc, tier) in first_row:
            raise DuplicateKey(f"rows {first_row[(loc, tier)]} and {n}: {loc!r} listed twice for {tier}",
                               [first_row[(loc, tier)], n])
        first_row[(loc, tier)] = n
        entries.setdefault(loc, {})[tier] = metro
    return MembershipTable(entries)


@dataclass(frozen=True)
class InstitutionRegistry:
    institutions: Mapping[str, Institution]
    _names: Mapping[str, str] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, institutions: Iterable[Institution], registry: Gazetteer | None = None):
        insts: dict[str, Institution] = {}
        names: dict[str, str] = {}
        for inst in institutions:
            if inst.id in insts:
                raise DuplicateKey(f"duplicate institution id {inst.id!r}")
            if registry is not None and inst.hq_locality not in registry:
                raise DanglingReference(f"institution {inst.id!r}: unknown hq locality {inst.hq_locality!r}")
            insts[inst.id] = inst
            for nm in (inst.name, *sorted(inst.alt_names)):
                key = regions.normalize(nm)
                if key in names and names[key] != inst.id:
                    raise DuplicateKey(f"name {nm!r} used by {names[key]!r} and {inst.id!r}")
                names[key] = inst.id
        return cls(insts, names)

    def __contains__(self, inst_id):
        return inst_id in self.institutions

    def __getitem__(self, inst_id) -> Institution:
        return self.institutions[inst_id]

    def __iter__(self):
        return iter(self.institutions.values())

    def __len__(self):
        return len(self.institutions)

    def match_name(self, text: str) -> str | None:
        return self._names.get(regions.normalize(text))

    def match_entry(self, entry: AffiliationEntry) -> str | None:
        """First registry institution named in the entry, scanning left to right.

        The institution segment is tried first, then sub-unit segments up to
        (not including) the locality.
        """
        hit = self.match_name(entry.institution) if entry.institution else None
        if hit is not None:
            return hit
        for seg in entry.segments()[1:-1]:
            if seg == entry.locality_name:
                break
            hit = self.match_name(seg)
            if hit is not None:
                return hit
        return None

    def located_in(self, locality_ids) -> list[str]:
        locality_ids = set(locality_ids)
        return sorted(i.id for i in self.institutions.values() if i.hq_locality in locality_ids)


def load_institutions(path, registry: Gazetteer | None = None) -> InstitutionRegistry:
    insts = []
    seen: dict[str, int] = {}
    for n, row in _read_rows(path, ["id", "name", "alt_names", "hq_locality_id"]):
        iid = row["id"].strip()
        hq = row["hq_locality_id"].strip()
        if not iid or not row["name"].strip() or not hq:
            raise SchemaError(f"row {n}: id, name and hq_locality_id are required", [n])
        if iid in seen:
            raise DuplicateKey(f"rows {seen[iid]} and {n}: duplicate institution id {iid!r}", [seen[iid], n])
        if registry is not None and hq not in registry:
            raise DanglingReference(f"row {n}: unknown hq locality {hq!r}", [n])
        seen[iid] = n
        insts.append(Institution(iid, row["name"].strip(), hq, _split_alts(row["alt_names"])))
    return InstitutionRegistry.build(insts, registry)


def load_travel_times(path, registry: Gazetteer | None = None) -> list[TravelTimeEdge]:
    edges = []
    seen: dict[tuple, int] = {}
    for n, row in _read_rows(path, ["locality_a", "locality_b", "minutes"]):
        a, b = row["locality_a"].strip(), row["locality_b"].strip()
        try:
            edge = TravelTimeEdge(a, b, float(row["minutes"]))
        except ValueError as exc:
            raise SchemaError(f"row {n}: {exc}", [n]) from None
        if registry is not None:
            for end in (a, b):
                if end not in registry:
                    raise DanglingReference(f"row {n}: unknown locality id {end!r}", [n])
        if edge.key in seen:
            raise DuplicateKey(f"rows {seen[edge.key]} and {n}: duplicate edge {edge.key}", [seen[edge.key], n])
        seen[edge.key] = n
        edges.append(edge)
    return edges


# ---------------------------------------------------------------- writers (fixtures, round trips)


def gazetteer_rows(registry: Gazetteer):
    for loc in sorted(registry, key=lambda l: l.id):
        yield (
            loc.id, loc.name, "|".join(sorted(loc.alt_names)), loc.admin_name or "", loc.country,
            repr(loc.lat), repr(loc.lon), "" if loc.population is None else loc.population,
            loc.settlement_type,
        )


GAZETTEER_COLUMNS = ["id", "name", "alt_names", "admin", "country", "lat", "lon", "population", "settlement_type"]
