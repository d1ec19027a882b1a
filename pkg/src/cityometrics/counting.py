"""Publication credit per locality, metro, or institution.

Regimes:

* ``integer`` - every distinct locality on a paper gets 1.
* ``integer_sum`` - locality (or institution) credits summed into metros; a
  paper spanning several member localities is counted several times.
* ``dedup`` - a paper counts once per metro it touches ("OR" query semantics).
* ``fractional`` - each paper hands out exactly 1 unit of credit.

The credit unit is always the paper, never the author. Fractional shares are
tallied as integer numerators keyed by denominator and only turned into floats
at the end, so chunked evaluation gives identical results for any chunking.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import chain
from typing import Iterable, Mapping, Sequence

from ._io import fold, format_number, render_csv
from .delineation import Partition
from .errors import PartitionMismatch, UnknownInstitution, UnresolvedAffiliations
from .gazetteer import InstitutionRegistry
from .records import Corpus, PublicationRecord

REGIMES = ("integer", "dedup", "fractional", "integer_sum")
BASES = ("distinct_locality", "address_instance")
UNIT_KINDS = ("locality", "metro", "institution")


@dataclass(frozen=True)
class AttributionPolicy:
    fractional_basis: str = "distinct_locality"
    metro_mapping: Partition | None = None  # None = identity (locality level)

    def __post_init__(self):
        if self.fractional_basis not in BASES:
            raise ValueError(f"fractional_basis must be one of {BASES}")

    def describe(self) -> str:
        mapping = "identity" if self.metro_mapping is None else self.metro_mapping.label
        return f"basis={self.fractional_basis};mapping={mapping}"


@dataclass(frozen=True)
class CountReport:
    unit_kind: str
    regime: str
    credits: Mapping[str, float]
    paper_total: int
    year_filter: tuple[int, int] | None = None
    policy: str | None = None
    corpus_hash: str | None = None
    partition_hash: str | None = None
    unresolved_count: int = 0
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.unit_kind not in UNIT_KINDS:
            raise ValueError(f"unit_kind must be one of {UNIT_KINDS}")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        object.__setattr__(self, "credits", dict(sorted(self.credits.items())))

    def get(self, unit: str) -> float:
        return self.credits.get(unit, 0)

    def total(self) -> float:
        if self.regime == "fractional":
            return float(sum(Fraction(v) for v in self.credits.values()))
        return sum(self.credits.values())

    def header(self) -> dict:
        yf = None if self.year_filter is None else f"{self.year_filter[0]}-{self.year_filter[1]}"
        meta = {
            "corpus_hash": self.corpus_hash,
            "year_filter": yf,
            "policy": self.policy,
            "unresolved_count": self.unresolved_count,
            "paper_total": self.paper_total,
        }
        if self.partition_hash:
            meta["partition_hash"] = self.partition_hash
        for i, note in enumerate(self.notes):
            meta[f"note_{i + 1}"] = note
        return meta

    def to_csv(self, meta: dict | None = None) -> str:
        rows = [(u, self.unit_kind, self.regime, format_number(c)) for u, c in self.credits.items()]
        return render_csv(["unit_id", "unit_kind", "regime", "credit"], rows, {**(meta or {}), **self.header()})


# ---------------------------------------------------------------- preparation


@dataclass(frozen=True)
class _Prepared:
    papers: list[tuple[str, ...]]  # resolved locality ids per paper, address instances in order
    unresolved_count: int
    year_filter: tuple[int, int] | None
    corpus_hash: str


def _in_years(rec: PublicationRecord, years) -> bool:
    return years is None or years[0] <= rec.year <= years[1]


def prepare(corpus: Corpus, year_range: tuple[int, int] | None = None, tolerance: float = 0.0) -> _Prepared:
    """Apply the year filter and the unresolved-affiliation tolerance.

    Papers with any unresolved affiliation are left out of every regime so
    that all reports on one corpus describe the same paper set.
    """
    bad = corpus.unresolved_papers
    keep_all = year_range is None
    skip_ids = set() if keep_all else {r.id for r in corpus.records if not _in_years(r, year_range)}
    bad_affs = sum(1 for rid, _, _ in corpus.unresolved if rid not in skip_ids)
    if keep_all and not bad:
        papers = list(corpus.paper_localities)
        total_affs = corpus.affiliation_count
    else:
        papers = []
        total_affs = 0
        for rec, locs in zip(corpus.records, corpus.paper_localities):
            if rec.id in skip_ids:
                continue
            total_affs += len(locs)
            if rec.id not in bad:
                papers.append(locs)
    if corpus.has_unlinked:
        raise ValueError("corpus has affiliations that are neither resolved nor listed as unresolved; run resolve first")
    ratio = bad_affs / total_affs if total_affs else 0.0
    if ratio > tolerance:
        sample = [f"{rid}[{idx}]: {why}" for rid, idx, why in corpus.unresolved if rid not in skip_ids][:10]
        raise UnresolvedAffiliations(
            f"{bad_affs} of {total_affs} affiliations unresolved ({ratio:.2%}) exceeds tolerance {tolerance:.2%}",
            sample,
        )
    return _Prepared(papers, bad_affs, year_range, corpus.fingerprint)


def _mapping(partition: Partition | None, papers: Sequence[tuple[str, ...]]) -> dict[str, str] | None:
    if partition is None:
        return None
    unit_of = partition.unit_of
    missing = sorted({loc for p in papers for loc in p if loc not in unit_of})
    if missing:
        raise PartitionMismatch(f"{len(missing)} localities are not in the partition (first: {missing[0]!r})", missing[:20])
    return unit_of


def _add(a: Counter, b: Counter) -> Counter:
    a.update(b)
    return a


def _finish_fraction(buckets: Counter) -> dict[str, float]:
    """{(unit, denominator): numerator} -> {unit: float}, exact until the final rounding."""
    exact: dict[str, Fraction] = {}
    for (unit, den), num in buckets.items():
        exact[unit] = exact.get(unit, Fraction(0)) + Fraction(num, den)
    return {u: float(v) for u, v in exact.items()}


# ---------------------------------------------------------------- per-paper shares


def paper_shares(localities: Sequence[str], basis: str = "distinct_locality",
                 unit_of: Mapping[str, str] | None = None) -> dict[str, Fraction]:
    """Exact credit shares of one paper; they always sum to 1."""
    if not localities:
        return {}
    if basis == "distinct_locality":
        distinct = set(localities)
        den = len(distinct)
        counts = Counter(unit_of[l] if unit_of else l for l in distinct)
    elif basis == "address_instance":
        den = len(localities)
        counts = Counter(unit_of[l] if unit_of else l for l in localities)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return {u: Fraction(m, den) for u, m in counts.items()}


# ---------------------------------------------------------------- regimes


def integer_count(corpus: Corpus, level: str = "locality", year_range=None,
                  tolerance: float = 0.0, threads: int = 1) -> CountReport:
    """Papers with at least one affiliation in each locality."""
    if level != "locality":
        raise ValueError("integer_count works at locality level; use metro_integer_sum or dedup_count for metros")
    prep = prepare(corpus, year_range, tolerance)

    def work(chunk):
        return Counter(chain.from_iterable(map(set, chunk)))

    tally = fold(prep.papers, work, _add, threads)
    return CountReport(
        "locality", "integer", dict(tally), len(prep.papers), prep.year_filter,
        "identity", prep.corpus_hash, None, prep.unresolved_count,
    )


def _sum_members(credits: Mapping[str, int], partition: Partition) -> dict[str, int]:
    unit_of = partition.unit_of
    out: dict[str, int] = {}
    for loc, value in sorted(credits.items()):
        unit = unit_of.get(loc)
        if unit is None:
            raise PartitionMismatch(f"locality {loc!r} is not in the partition")
        out[unit] = out.get(unit, 0) + value
    return out


def metro_integer_sum(locality_report: CountReport, partition: Partition) -> CountReport:
    """Sum member-locality credits into metros (the double-counting baseline)."""
    if locality_report.unit_kind != "locality" or locality_report.regime not in ("integer", "integer_sum"):
        raise ValueError("metro_integer_sum needs a locality-level integer report")
    return CountReport(
        "metro", "integer_sum", _sum_members(locality_report.credits, partition),
        locality_report.paper_total, locality_report.year_filter,
        f"mapping={partition.label}", locality_report.corpus_hash, partition.fingerprint,
        locality_report.unresolved_count,
        locality_report.notes + ("papers spanning several member localities are counted once per locality",),
    )


def dedup_count(corpus: Corpus, partition: Partition, year_range=None,
                tolerance: float = 0.0, threads: int = 1) -> CountReport:
    """Papers with at least one affiliation anywhere in each metro."""
    prep = prepare(corpus, year_range, tolerance)
    unit_of = _mapping(partition, prep.papers)

    def work(chunk):
        return Counter(chain.from_iterable({unit_of[l] for l in locs} for locs in chunk))

    tally = fold(prep.papers, work, _add, threads)
    return CountReport(
        "metro", "dedup", dict(tally), len(prep.papers), prep.year_filter,
        f"mapping={partition.label}", prep.corpus_hash, partition.fingerprint, prep.unresolved_count,
    )


def fractional_count(corpus: Corpus, policy: AttributionPolicy | None = None, year_range=None,
                     tolerance: float = 0.0, threads: int = 1) -> CountReport:
    """Each paper spreads one unit of credit over its localities, then into metros."""
    policy = policy or AttributionPolicy()
    prep = prepare(corpus, year_range, tolerance)
    unit_of = _mapping(policy.metro_mapping, prep.papers)
    distinct = policy.fractional_basis == "distinct_locality"

    def keys(chunk):
        # one (unit, denominator) key per share; repeats add up to the numerator
        for locs in chunk:
            pool = set(locs) if distinct else locs
            den = len(pool)
            if unit_of is None:
                for l in pool:
                    yield (l, den)
            else:
                for l in pool:
                    yield (unit_of[l], den)

    def work(chunk):
        return Counter(keys(chunk))

    buckets = fold(prep.papers, work, _add, threads)
    partition = policy.metro_mapping
    return CountReport(
        "locality" if partition is None else "metro", "fractional", _finish_fraction(buckets),
        len(prep.papers), prep.year_filter, policy.describe(), prep.corpus_hash,
        None if partition is None else partition.fingerprint, prep.unresolved_count,
    )


# ---------------------------------------------------------------- institutions


def _paper_institutions(rec: PublicationRecord, inst_registry: InstitutionRegistry, memo: dict):
    """{institution id: affiliations naming it} and the unmatched institution strings."""
    found: dict[str, list] = {}
    unmatched = set()
    for entry in rec.affiliations:
        if not entry.parsed:
            continue
        hit = memo.get(entry, memo)
        if hit is memo:
            hit = inst_registry.match_entry(entry)
            memo[entry] = hit
        if hit is None:
            unmatched.add(entry.institution)
        else:
            found.setdefault(hit, []).append(entry)
    return found, unmatched


def institution_count(corpus: Corpus, inst_registry: InstitutionRegistry, year_range=None,
                      threads: int = 1) -> CountReport:
    """Papers naming each registry institution (integer, per institution)."""
    recs = [r for r in corpus.records if _in_years(r, year_range)]

    def work(chunk):
        c, memo = Counter(), {}
        for rec in chunk:
            found, _ = _paper_institutions(rec, inst_registry, memo)
            c.update(found.keys())
        return c

    tally = fold(recs, work, _add, threads)
    return CountReport(
        "institution", "integer", dict(tally), len(recs), year_range, "identity", corpus.fingerprint,
    )


def institution_rollup(inst_counts: Mapping[str, int] | CountReport, inst_registry: InstitutionRegistry,
                       partition: Partition | None = None) -> CountReport:
    """Add institution counts up at the headquarters locality (or its metro)."""
    base = inst_counts if isinstance(inst_counts, CountReport) else None
    counts = inst_counts.credits if base is not None else inst_counts
    unknown = sorted(i for i in counts if i not in inst_registry)
    if unknown:
        raise UnknownInstitution(f"unknown institution ids: {', '.join(unknown[:10])}", unknown)
    by_loc: dict[str, int] = {}
    for inst_id, n in sorted(counts.items()):
        hq = inst_registry[inst_id].hq_locality
        by_loc[hq] = by_loc.get(hq, 0) + n
    credits = by_loc if partition is None else _sum_members(by_loc, partition)
    return CountReport(
        "locality" if partition is None else "metro", "integer_sum", credits,
        base.paper_total if base else sum(counts.values()),
        base.year_filter if base else None, "hq_rollup",
        base.corpus_hash if base else None, None if partition is None else partition.fingerprint,
        notes=("co-affiliated institutions make this sum double count shared papers",),
    )


@dataclass(frozen=True)
class MismatchRow:
    institution_id: str
    total: int
    at_hq: int

    @property
    def hq_share(self) -> float:
        return self.at_hq / self.total if self.total else 0.0


@dataclass(frozen=True)
class MismatchReport:
    rows: tuple[MismatchRow, ...]
    off_hq: Mapping[str, tuple[str, ...]]  # institution id -> record ids not produced at HQ
    unmatched: Mapping[str, int]  # institution text -> papers
    corpus_hash: str | None = None

    def row(self, inst_id: str) -> MismatchRow:
        for r in self.rows:
            if r.institution_id == inst_id:
                return r
        raise KeyError(inst_id)

    def to_csv(self, meta: dict | None = None) -> str:
        rows = [(r.institution_id, r.total, r.at_hq, format_number(r.hq_share)) for r in self.rows]
        return render_csv(["institution_id", "total", "at_hq", "hq_share"], rows,
                          {**(meta or {}), "corpus_hash": self.corpus_hash})

    def unmatched_csv(self, meta: dict | None = None) -> str:
        return render_csv(["institution_text", "papers"], sorted(self.unmatched.items()), meta)

    def render_text(self) -> str:
        lines = [f"{'institution':<24} {'total':>8} {'at_hq':>8} {'hq_share':>9}"]
        for r in self.rows:
            lines.append(f"{r.institution_id:<24} {r.total:>8} {r.at_hq:>8} {percent(r.at_hq, r.total):>9}")
        return "\n".join(lines) + "\n"


def percent(num, den, places: int = 1) -> str:
    """``num/den`` as a percentage rounded half-up at ``places`` decimals."""
    if not den:
        return "-"
    exact = Fraction(num) / Fraction(den) * 100
    scale = 10 ** places
    scaled = exact * scale
    rounded = int(scaled) + (1 if scaled - int(scaled) >= Fraction(1, 2) else 0)
    whole, frac = divmod(rounded, scale)
    return f"{whole}.{frac:0{places}d}%" if places else f"{whole}%"


def hq_mismatch(corpus: Corpus, inst_registry: InstitutionRegistry, year_range=None) -> MismatchReport:
    """Compare where each institution's papers were produced with where it is headquartered."""
    total: Counter = Counter()
    at_hq: Counter = Counter()
    off: dict[str, list[str]] = {}
    unmatched: Counter = Counter()
    memo: dict = {}
    for rec in corpus.records:
        if not _in_years(rec, year_range):
            continue
        found, missing = _paper_institutions(rec, inst_registry, memo)
        unmatched.update(missing)
        for inst_id, entries in found.items():
            total[inst_id] += 1
            hq = inst_registry[inst_id].hq_locality
            if any(e.resolved_locality == hq for e in entries):
                at_hq[inst_id] += 1
            else:
                off.setdefault(inst_id, []).append(rec.id)
    rows = sorted(
        (MismatchRow(i, total[i], at_hq[i]) for i in total),
        key=lambda r: (Fraction(r.at_hq, r.total), r.institution_id),
    )
    return MismatchReport(
        tuple(rows), {k: tuple(v) for k, v in sorted(off.items())}, dict(sorted(unmatched.items())),
        corpus.fingerprint,
    )
