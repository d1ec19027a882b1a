"""Metropolitan-area partitions of a gazetteer.

Three strategies: a membership-table lookup, single-linkage agglomeration
under a distance threshold, and travel-time merging of an existing partition.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from ._io import render_csv, read_csv_skipping_header, sha256_bytes
from .errors import (
    DanglingReference,
    EmptyTier,
    GazetteerMismatch,
    MissingPopulation,
    SchemaError,
)
from .gazetteer import Gazetteer, MembershipTable, TravelTimeEdge, haversine_km, pairwise_km

log = logging.getLogger(__name__)

STRATEGIES = ("lookup", "distance", "travel_time")
# pairs this close to the threshold are re-measured with the scalar haversine
_BOUNDARY_KM = 1e-6


@dataclass(frozen=True)
class MetroArea:
    id: str
    members: frozenset[str]
    strategy: str
    params: str = ""

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        if not self.members:
            raise ValueError(f"metro {self.id!r} has no members")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class Partition:
    """Metros plus singleton localities; each locality appears exactly once.

    For counting, a singleton is its own unit and keeps its locality id.
    """

    metros: tuple[MetroArea, ...]
    singletons: frozenset[str] = frozenset()
    skipped_edges: tuple[TravelTimeEdge, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "metros", tuple(sorted(self.metros, key=lambda m: m.id)))
        object.__setattr__(self, "singletons", frozenset(self.singletons))
        seen: dict[str, str] = {}
        ids = set()
        for metro in self.metros:
            if metro.id in ids:
                raise ValueError(f"duplicate metro id {metro.id!r}")
            ids.add(metro.id)
            for loc in metro.members:
                if loc in seen:
                    raise ValueError(f"locality {loc!r} in metros {seen[loc]!r} and {metro.id!r}")
                seen[loc] = metro.id
        for loc in self.singletons:
            if loc in seen:
                raise ValueError(f"locality {loc!r} is both a singleton and in metro {seen[loc]!r}")
            if loc in ids:
                raise ValueError(f"singleton {loc!r} collides with a metro id")

    @classmethod
    def identity(cls, registry: Gazetteer) -> "Partition":
        return cls((), registry.ids())

    @cached_property
    def unit_of(self) -> dict[str, str]:
        """locality id -> unit id (metro id, or the locality itself for singletons)."""
        out = {loc: loc for loc in self.singletons}
        for metro in self.metros:
            for loc in metro.members:
                out[loc] = metro.id
        return out

    @cached_property
    def members_of(self) -> dict[str, frozenset[str]]:
        out = {m.id: m.members for m in self.metros}
        for loc in self.singletons:
            out[loc] = frozenset((loc,))
        return out

    @cached_property
    def by_id(self) -> dict[str, MetroArea]:
        return {m.id: m for m in self.metros}

    @property
    def localities(self) -> frozenset[str]:
        return frozenset(self.unit_of)

    @cached_property
    def fingerprint(self) -> str:
        return sha256_bytes(partition_csv(self).encode("utf-8"))

    @property
    def label(self) -> str:
        kinds = sorted({f"{m.strategy}({m.params.split(';')[0]})" for m in self.metros})
        return "+".join(kinds) if kinds else "identity"


def check_partition(partition: Partition, registry: Gazetteer) -> None:
    """Raise unless every gazetteer locality appears exactly once."""
    have, want = partition.localities, registry.ids()
    if have != want:
        missing = sorted(want - have)[:5]
        extra = sorted(have - want)[:5]
        raise GazetteerMismatch(
            f"partition does not cover the gazetteer (missing {missing}, unknown {extra})"
        )


class UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller id wins so roots do not depend on edge order
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def groups(self) -> list[frozenset[str]]:
        out: dict[str, set[str]] = defaultdict(set)
        for x in self.parent:
            out[self.find(x)].add(x)
        return sorted((frozenset(g) for g in out.values()), key=min)


# ---------------------------------------------------------------- strategies


def delineate_lookup(registry: Gazetteer, memberships: MembershipTable, tier: str) -> Partition:
    """Group localities by the metro ids of one tier of a membership table."""
    table = memberships.tier(tier)
    if len(memberships) and not table:
        raise EmptyTier(f"membership table has no {tier} entries")
    groups: dict[str, set[str]] = defaultdict(set)
    for loc, metro_id in table.items():
        if loc not in registry:
            raise DanglingReference(f"membership lists unknown locality {loc!r}")
        groups[metro_id].add(loc)
    metros = tuple(MetroArea(mid, frozenset(m), "lookup", f"tier={tier}") for mid, m in groups.items())
    singletons = registry.ids() - set(table)
    return Partition(metros, singletons)


def _representative(members: Iterable[str], registry: Gazetteer) -> str:
    """Largest-population member; ties (and missing populations) go to the smallest id."""
    def key(loc_id):
        pop = registry[loc_id].population
        return (-(pop if pop is not None else -1), loc_id)
    return min(members, key=key)


def close_pairs(registry: Gazetteer, threshold_km: float, ids: Sequence[str] | None = None):
    """Yield (a, b) with distance_km(a, b) <= threshold_km."""
    ids = sorted(registry.ids()) if ids is None else list(ids)
    n = len(ids)
    if n < 2:
        return
    lat = np.array([registry[i].lat for i in ids], dtype=float)
    lon = np.array([registry[i].lon for i in ids], dtype=float)
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        d = pairwise_km(lat, lon, np.full(j.shape, i), j)
        hits = j[d <= threshold_km + _BOUNDARY_KM]
        for k in hits:
            dk = d[k - i - 1]
            if abs(dk - threshold_km) <= _BOUNDARY_KM:
                dk = haversine_km(lat[i], lon[i], lat[k], lon[k])
            if dk <= threshold_km:
                yield ids[i], ids[k]


def delineate_distance(
    registry: Gazetteer,
    threshold_km: float,
    core_population: int | None = None,
) -> Partition:
    """Connected components of the graph joining localities at most ``threshold_km`` apart.

    With ``core_population`` only components holding a locality at least that
    populous become metros; members of the others are listed one per metro,
    flagged "below core" in ``params``.
    """
    if not threshold_km > 0:
        raise ValueError("threshold_km must be positive")
    if core_population is not None:
        if core_population <= 0:
            raise ValueError("core_population must be positive")
        missing = sorted(l.id for l in registry if l.population is None)
        if missing:
            raise MissingPopulation(
                f"{len(missing)} localities lack population (first: {missing[0]!r})", missing[:20]
            )
    uf = UnionFind(registry.ids())
    for a, b in close_pairs(registry, threshold_km):
        uf.union(a, b)
    params = f"D={threshold_km:g}km"
    if core_population is not None:
        params += f";core>={core_population}"
    metros = []
    for group in uf.groups():
        has_core = core_population is None or any(
            registry[l].population >= core_population for l in group
        )
        if has_core:
            metros.append(MetroArea(_representative(group, registry), group, "distance", params))
        else:
            for loc in group:
                metros.append(MetroArea(loc, frozenset((loc,)), "distance", params + ";below core"))
    return Partition(tuple(metros))


def delineate_travel_time(
    base: Partition,
    edges: Iterable[TravelTimeEdge],
    threshold_minutes: float,
    registry: Gazetteer,
    inclusive: bool = False,
) -> Partition:
    """Merge base units whose representatives are closer than ``threshold_minutes``.

    A unit's representative is its metro id when that id is a member locality,
    otherwise its most populous member. Edges touching a non-representative
    are skipped and kept in ``skipped_edges``. Merging is transitive.
    """
    if not threshold_minutes > 0:
        raise ValueError("threshold_minutes must be positive")
    units = base.members_of
    rep_to_unit = {}
    for unit_id, members in units.items():
        rep = unit_id if unit_id in members else _representative(members, registry)
        rep_to_unit[rep] = unit_id

    uf = UnionFind(units)
    skipped = []
    for edge in sorted(edges, key=lambda e: (e.key, e.minutes)):
        ua, ub = rep_to_unit.get(edge.a), rep_to_unit.get(edge.b)
        if ua is None or ub is None:
            skipped.append(edge)
            continue
        close = edge.minutes <= threshold_minutes if inclusive else edge.minutes < threshold_minutes
        if close:
            uf.union(ua, ub)
    if skipped:
        log.warning("skipped %d travel-time edges whose endpoints are not unit representatives", len(skipped))

    op = "<=" if inclusive else "<"
    metros, singletons = [], set()
    for group in uf.groups():
        if len(group) == 1:
            (unit_id,) = group
            if unit_id in base.by_id:
                metros.append(base.by_id[unit_id])
            else:
                singletons.add(unit_id)
            continue
        winner = min(group, key=lambda u: (-len(units[u]), u))
        members = frozenset().union(*(units[u] for u in group))
        params = f"T{op}{threshold_minutes:g}min;merged={'+'.join(sorted(group))}"
        metros.append(MetroArea(winner, members, "travel_time", params))
    return Partition(tuple(metros), frozenset(singletons), tuple(skipped))


# ---------------------------------------------------------------- comparison


@dataclass(frozen=True)
class PartitionDiff:
    rows: tuple[tuple[str, str, str, bool], ...]  # locality, unit in p1, unit in p2, changed
    splits: tuple[tuple[str, tuple[str, ...]], ...]  # p1 unit -> p2 units it spreads over
    merges: tuple[tuple[str, tuple[str, ...]], ...]  # p2 unit <- p1 units it gathers
    matched: tuple[tuple[str, str], ...]

    @property
    def changed(self) -> list[str]:
        return [loc for loc, _, _, flag in self.rows if flag]

    @property
    def changed_count(self) -> int:
        return sum(1 for r in self.rows if r[3])

    def to_csv(self, meta: dict | None = None) -> str:
        rows = [(loc, m1, m2, "1" if flag else "0") for loc, m1, m2, flag in self.rows]
        return render_csv(["locality_id", "metro_id_p1", "metro_id_p2", "changed"], rows, meta)

    def summary(self) -> str:
        lines = [f"localities: {len(self.rows)}", f"changed: {self.changed_count}"]
        for unit, parts in self.splits:
            lines.append(f"split {unit} -> {', '.join(parts)}")
        for unit, parts in self.merges:
            lines.append(f"merge {', '.join(parts)} -> {unit}")
        return "\n".join(lines) + "\n"


def compare_partitions(p1: Partition, p2: Partition) -> PartitionDiff:
    """Per-locality assignment diff after a one-to-one matching of units.

    Units are paired greedily by descending overlap (ties by ids). A locality
    counts as changed unless its two units are a matched pair, so relabelled
    but otherwise identical metros do not register as changes.
    """
    if p1.localities != p2.localities:
        raise GazetteerMismatch("partitions cover different locality sets")
    u1, u2 = p1.unit_of, p2.unit_of
    overlap = Counter((u1[loc], u2[loc]) for loc in u1)
    matched: dict[str, str] = {}
    taken: set[str] = set()
    for (a, b), n in sorted(overlap.items(), key=lambda kv: (-kv[1], kv[0])):
        if a not in matched and b not in taken:
            matched[a] = b
            taken.add(b)
    rows = tuple(
        (loc, u1[loc], u2[loc], matched.get(u1[loc]) != u2[loc]) for loc in sorted(u1)
    )
    spread: dict[str, set[str]] = defaultdict(set)
    gather: dict[str, set[str]] = defaultdict(set)
    for a, b in overlap:
        spread[a].add(b)
        gather[b].add(a)
    splits = tuple((a, tuple(sorted(bs))) for a, bs in sorted(spread.items()) if len(bs) > 1)
    merges = tuple((b, tuple(sorted(as_))) for b, as_ in sorted(gather.items()) if len(as_) > 1)
    return PartitionDiff(rows, splits, merges, tuple(sorted(matched.items())))


# ---------------------------------------------------------------- io


def partition_rows(partition: Partition):
    rows = []
    for metro in partition.metros:
        for loc in metro.members:
            rows.append((loc, metro.id, metro.strategy, metro.params))
    for loc in partition.singletons:
        rows.append((loc, "", "", ""))
    rows.sort()
    return rows


def partition_csv(partition: Partition, meta: dict | None = None) -> str:
    return render_csv(["locality_id", "metro_id", "strategy", "params"], partition_rows(partition), meta)


def load_partition(path) -> Partition:
    _, rows = read_csv_skipping_header(path)
    groups: dict[str, set[str]] = defaultdict(set)
    info: dict[str, tuple[str, str]] = {}
    singletons = set()
    for n, row in enumerate(rows, start=2):
        try:
            loc, metro = row["locality_id"], row["metro_id"]
            strategy, params = row["strategy"], row["params"]
        except KeyError as exc:
            raise SchemaError(f"partition CSV missing column {exc}") from None
        if not metro:
            singletons.add(loc)
            continue
        if info.setdefault(metro, (strategy, params)) != (strategy, params):
            raise SchemaError(f"row {n}: metro {metro!r} has inconsistent strategy/params", [n])
        groups[metro].add(loc)
    metros = tuple(MetroArea(mid, frozenset(m), *info[mid]) for mid, m in groups.items())
    return Partition(metros, frozenset(singletons))
