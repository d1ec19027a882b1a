"""Publication records, affiliation parsing, and corpus ingestion.

A raw affiliation reads ``institution, [sub-units...], locality, [admin], country``.
Ingestion accepts JSONL and CSV files; bad lines are quarantined with their
line number instead of aborting the run.
"""

from __future__ import annotations

import csv
import json
import os
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from . import regions
from ._io import atomic_write_text, fold, gc_paused, header_lines, render_csv, sha256_bytes
from .errors import DuplicateId, MalformedLine, ParseFailure

# a token holding a run of >= 4 digits, optionally mixed with letters/hyphens
_POSTAL_TOKEN = re.compile(r"^(?=[A-Za-z0-9-]*\d{4})[A-Za-z0-9-]+$")
# WoS style "CA 94305 USA" last segment
_US_TAIL = re.compile(r"^(?P<head>.+?)\s+(?P<country>USA)$")

PARSE_FAILURE = "parse_failure"


@dataclass(frozen=True, slots=True)
class AffiliationEntry:
    raw: str
    institution: str = ""
    locality_name: str = ""
    admin_name: str | None = None
    country_name: str = ""
    resolved_locality: str | None = None

    @property
    def parsed(self) -> bool:
        return bool(self.country_name)

    def segments(self) -> list[str]:
        """All comma-separated segments of ``raw`` (sub-units included)."""
        return [s for s in (p.strip() for p in split_top_level(self.raw)) if s]


@dataclass(frozen=True, slots=True)
class PublicationRecord:
    id: str
    year: int
    affiliations: tuple[AffiliationEntry, ...]

    def __post_init__(self):
        if not self.affiliations:
            raise ValueError(f"record {self.id!r} has no affiliations")


@dataclass(frozen=True, slots=True)
class QuarantineEntry:
    record_id: str
    line_no: int
    reason: str
    source: str = ""

    def sort_key(self):
        return (self.source, self.line_no, self.record_id, self.reason)


@dataclass(frozen=True)
class Corpus:
    """Records sorted by id plus per-affiliation problems.

    ``unresolved`` holds ``(record_id, affiliation_index, reason)``. The
    line-level ``quarantine`` is ingestion metadata and does not take part in
    equality (a corpus written back to JSONL no longer contains the bad lines).
    """

    records: tuple[PublicationRecord, ...]
    unresolved: tuple[tuple[str, int, str], ...] = ()
    quarantine: tuple[QuarantineEntry, ...] = field(default=(), compare=False)

    def __post_init__(self):
        recs = tuple(sorted(self.records, key=lambda r: r.id))
        object.__setattr__(self, "records", recs)
        object.__setattr__(self, "unresolved", tuple(sorted(self.unresolved)))
        object.__setattr__(self, "quarantine", tuple(sorted(self.quarantine, key=QuarantineEntry.sort_key)))
        if self.unresolved:
            by_id = self.by_id
            for rid, idx, _ in self.unresolved:
                rec = by_id.get(rid)
                if rec is None or not 0 <= idx < len(rec.affiliations):
                    raise ValueError(f"unresolved entry points at missing affiliation {rid}[{idx}]")

    def __len__(self):
        return len(self.records)

    @cached_property
    def by_id(self) -> dict[str, PublicationRecord]:
        return {r.id: r for r in self.records}

    @property
    def year_range(self) -> tuple[int, int] | None:
        if not self.records:
            return None
        years = [r.year for r in self.records]
        return min(years), max(years)

    @cached_property
    def unresolved_papers(self) -> frozenset[str]:
        return frozenset(rid for rid, _, _ in self.unresolved)

    @cached_property
    def affiliation_count(self) -> int:
        return sum(len(r.affiliations) for r in self.records)

    @cached_property
    def paper_localities(self) -> tuple[tuple[str | None, ...], ...]:
        """Resolved locality id of every affiliation, record by record."""
        with gc_paused():
            return tuple(tuple(a.resolved_locality for a in r.affiliations) for r in self.records)

    @cached_property
    def has_unlinked(self) -> bool:
        """True if some affiliation is neither resolved nor listed as unresolved."""
        bad = self.unresolved_papers
        return any(None in locs and rec.id not in bad for rec, locs in zip(self.records, self.paper_localities))

    @cached_property
    def fingerprint(self) -> str:
        """Order-independent content hash (records are kept sorted)."""
        with gc_paused():
            return sha256_bytes(to_jsonl(self).encode("utf-8"))


# ---------------------------------------------------------------- parsing


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside parentheses/brackets."""
    if "(" not in text and "[" not in text:
        return text.split(sep)
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]" and depth:
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def split_affiliations(field_text: str) -> list[str]:
    """Semicolons separate several addresses inside one raw field."""
    return [p.strip() for p in split_top_level(field_text, ";") if p.strip()]


def strip_postal(segment: str) -> str:
    """Drop one leading and one trailing postal-code token."""
    tokens = segment.split()
    if tokens and _POSTAL_TOKEN.match(tokens[-1]):
        tokens.pop()
    if tokens and _POSTAL_TOKEN.match(tokens[0]):
        tokens.pop(0)
    return " ".join(tokens)


def parse_affiliation(raw: str, admin_regions: dict | None = None) -> AffiliationEntry:
    """Split an address into institution, locality, optional admin, country.

    Raises ParseFailure when no country can be separated.
    """
    if not raw or not raw.strip():
        raise ParseFailure("empty affiliation string")
    segs = [s for s in (p.strip() for p in split_top_level(raw)) if s]
    if segs:
        m = _US_TAIL.match(segs[-1])
        if m and len(segs) >= 2:
            segs[-1:] = [m.group("head"), m.group("country")]
    if len(segs) < 2:
        raise ParseFailure(f"no country separable in {raw!r}")

    country = segs[-1]
    institution = segs[0]
    if len(segs) == 2:
        return AffiliationEntry(raw=raw, institution=institution, country_name=country)

    i = len(segs) - 2
    cand = strip_postal(segs[i])
    if not cand and i - 1 >= 1:
        i -= 1
        cand = strip_postal(segs[i])
    if not cand:
        cand = segs[i]

    admin = None
    # the admin rule needs a segment between institution and admin to hold the locality
    if i - 1 >= 1 and regions.is_known_admin(country, cand, admin_regions):
        admin = cand
        i -= 1
        locality = strip_postal(segs[i]) or segs[i]
    else:
        locality = cand
    return AffiliationEntry(
        raw=raw,
        institution=institution,
        locality_name=locality,
        admin_name=admin,
        country_name=country,
    )


@lru_cache(maxsize=1 << 18)
def _parse_cached(raw: str) -> AffiliationEntry | str:
    try:
        return parse_affiliation(raw)
    except ParseFailure as exc:
        return f"{PARSE_FAILURE}: {exc}"


@lru_cache(maxsize=1 << 18)
def _parse_field_cached(text: str) -> tuple:
    """Entries (or parse-failure reasons) for every ';'-separated piece of ``text``."""
    out = []
    for piece in split_affiliations(text):
        parsed = _parse_cached(piece)
        out.append((AffiliationEntry(raw=piece), parsed) if isinstance(parsed, str) else (parsed, None))
    return tuple(out)


def _parse_field(text: str, admin_regions: dict | None) -> tuple:
    if not admin_regions:
        return _parse_field_cached(text)
    out = []
    for piece in split_affiliations(text):
        parsed = _parse_or_reason(piece, admin_regions)
        out.append((AffiliationEntry(raw=piece), parsed) if isinstance(parsed, str) else (parsed, None))
    return tuple(out)


def _parse_or_reason(raw: str, admin_regions: dict | None):
    if admin_regions:
        try:
            return parse_affiliation(raw, admin_regions)
        except ParseFailure as exc:
            return f"{PARSE_FAILURE}: {exc}"
    return _parse_cached(raw)


# ---------------------------------------------------------------- record building


def _synth_raw(institution: str, locality: str, admin: str | None, country: str) -> str:
    return ", ".join(p for p in (institution, locality, admin, country) if p)


def _entries_from_json(affs, admin_regions) -> tuple[list[AffiliationEntry], dict[int, str]]:
    """Build deduplicated entries; returns (entries, {index: unresolved reason})."""
    if not isinstance(affs, list) or not affs:
        raise MalformedLine("affiliations must be a non-empty list")
    entries: list[AffiliationEntry] = []
    reasons: list[str | None] = []
    for aff in affs:
        if not isinstance(aff, dict):
            raise MalformedLine("affiliation must be an object")
        if "locality" in aff or "country" in aff:
            loc, country = aff.get("locality"), aff.get("country")
            inst, admin = aff.get("institution", ""), aff.get("admin")
            if not isinstance(loc, str) or not isinstance(country, str) or not country.strip():
                raise MalformedLine("structured affiliation needs string locality and country")
            if not isinstance(inst, str) or (admin is not None and not isinstance(admin, str)):
                raise MalformedLine("institution/admin must be strings")
            raw = aff.get("raw")
            if raw is None:
                raw = _synth_raw(inst, loc, admin, country)
            elif not isinstance(raw, str):
                raise MalformedLine("raw must be a string")
            loc_id = aff.get("locality_id")
            if loc_id is not None and not isinstance(loc_id, str):
                raise MalformedLine("locality_id must be a string")
            entries.append(AffiliationEntry(raw, inst, loc, admin or None, country, loc_id))
            reason = aff.get("unresolved")
            reasons.append(str(reason) if reason else None)
        elif "raw" in aff:
            raw = aff["raw"]
            if not isinstance(raw, str) or not raw.strip():
                raise MalformedLine("raw affiliation must be a non-empty string")
            for entry, reason in _parse_field(raw, admin_regions):
                entries.append(entry)
                reasons.append(reason)
        else:
            raise MalformedLine("affiliation needs 'raw' or 'locality'+'country'")
    return _dedupe(entries, reasons)


def _entries_from_raw_field(text: str, admin_regions) -> tuple[list[AffiliationEntry], dict[int, str]]:
    entries, reasons = [], []
    for entry, reason in _parse_field(text, admin_regions):
        entries.append(entry)
        reasons.append(reason)
    if not entries:
        raise MalformedLine("no affiliations")
    return _dedupe(entries, reasons)


def _dedupe(entries, reasons):
    if len(entries) == 1:
        return entries, ({0: reasons[0]} if reasons[0] else {})
    seen: set = set()
    out: list[AffiliationEntry] = []
    out_reasons: dict[int, str] = {}
    for entry, reason in zip(entries, reasons):
        if entry in seen:
            continue
        seen.add(entry)
        if reason:
            out_reasons[len(out)] = reason
        out.append(entry)
    return out, out_reasons


def _check_id_year(rid, year):
    if not isinstance(rid, str) or not rid.strip():
        raise MalformedLine("id must be a non-empty string")
    if isinstance(year, bool) or not isinstance(year, int):
        raise MalformedLine("year must be an integer")


def record_from_json_line(line: str, admin_regions: dict | None = None):
    """Returns (record, {affiliation index: reason}); raises MalformedLine."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise MalformedLine("line is not a JSON object")
    rid, year = obj.get("id"), obj.get("year")
    _check_id_year(rid, year)
    entries, reasons = _entries_from_json(obj.get("affiliations"), admin_regions)
    return PublicationRecord(rid, year, tuple(entries)), reasons


def record_from_csv_row(row: list[str], admin_regions: dict | None = None):
    if len(row) != 3:
        raise MalformedLine(f"expected 3 columns, got {len(row)}")
    rid, year_text, raw = (c.strip() for c in row)
    try:
        year = int(year_text)
    except ValueError:
        raise MalformedLine(f"year {year_text!r} is not an integer") from None
    _check_id_year(rid, year)
    entries, reasons = _entries_from_raw_field(raw, admin_regions)
    return PublicationRecord(rid, year, tuple(entries)), reasons


# ---------------------------------------------------------------- ingestion


@dataclass
class _Partial:
    records: dict[str, tuple[PublicationRecord, str]] = field(default_factory=dict)
    unresolved: list = field(default_factory=list)
    quarantine: list = field(default_factory=list)
    duplicates: list = field(default_factory=list)  # (id, location)


def _merge(a: _Partial, b: _Partial) -> _Partial:
    if len(b.records) > len(a.records):
        a, b = b, a
    for rid, (rec, loc) in b.records.items():
        if rid in a.records:
            a.duplicates.append((rid, loc))
        else:
            a.records[rid] = (rec, loc)
    a.unresolved.extend(b.unresolved)
    a.quarantine.extend(b.quarantine)
    a.duplicates.extend(b.duplicates)
    return a


def _guess_id(line: str) -> str:
    m = re.search(r'"id"\s*:\s*"([^"]*)"', line)
    return m.group(1) if m else ""


def _work(items, admin_regions) -> _Partial:
    part = _Partial()
    for source, line_no, fmt, payload in items:
        loc = f"{source}:{line_no}"
        try:
            if fmt == "jsonl":
                if not payload.strip():
                    raise MalformedLine("blank line")
                rec, reasons = record_from_json_line(payload, admin_regions)
            else:
                rec, reasons = record_from_csv_row(payload, admin_regions)
        except MalformedLine as exc:
            rid = _guess_id(payload) if fmt == "jsonl" else (payload[0].strip() if payload else "")
            part.quarantine.append(QuarantineEntry(rid, line_no, f"malformed_line: {exc}", source))
            continue
        if rec.id in part.records:
            part.duplicates.append((rec.id, loc))
            continue
        part.records[rec.id] = (rec, loc)
        for idx, reason in reasons.items():
            part.unresolved.append((rec.id, idx, reason))
    return part


def detect_format(path: str | os.PathLike) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise ValueError(f"cannot infer format of {path}; pass fmt='jsonl' or 'csv'")


def _read_items(path, fmt: str) -> list:
    source = Path(path).name
    items = []
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if line.startswith("#"):
                    continue
                items.append((source, line_no, "jsonl", line.rstrip("\n")))
    elif fmt == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return items
            if [h.strip() for h in header] != ["id", "year", "raw_affiliations"]:
                raise MalformedLine(f"{source}: CSV header must be id,year,raw_affiliations")
            for row in reader:
                items.append((source, reader.line_num, "csv", row))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return items


def ingest(
    paths: str | os.PathLike | Sequence[str | os.PathLike],
    fmt: str | None = None,
    threads: int = 1,
    admin_regions: dict | None = None,
) -> Corpus:
    """Read one or more corpus files into a single Corpus.

    Raises DuplicateId if two lines (in any files) share an id.
    """
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    items = []
    for path in paths:
        items.extend(_read_items(path, fmt or detect_format(path)))
    return build_corpus(items, threads=threads, admin_regions=admin_regions)


def build_corpus(items: list, threads: int = 1, admin_regions: dict | None = None) -> Corpus:
    with gc_paused():
        part = fold(items, lambda chunk: _work(chunk, admin_regions), _merge, threads)
        if part.duplicates:
            raise _duplicate_error(part)
        return Corpus(
            records=tuple(rec for rec, _ in part.records.values()),
            unresolved=tuple(part.unresolved),
            quarantine=tuple(part.quarantine),
        )


def _duplicate_error(part: _Partial) -> DuplicateId:
    locs: dict[str, set[str]] = {}
    for rid, loc in part.duplicates:
        locs.setdefault(rid, set()).add(loc)
        if rid in part.records:
            locs[rid].add(part.records[rid][1])
    details = [{"id": rid, "locations": sorted(v)} for rid, v in sorted(locs.items())]
    first = details[0]
    return DuplicateId(
        f"duplicate id {first['id']!r} at {', '.join(first['locations'])}"
        + (f" (+{len(details) - 1} more ids)" if len(details) > 1 else ""),
        details,
    )


def ingest_lines(lines: Iterable[str], source: str = "<memory>", threads: int = 1) -> Corpus:
    """JSONL lines already in memory (tests, pipes)."""
    items = [(source, i, "jsonl", line.rstrip("\n")) for i, line in enumerate(lines, start=1)
             if not line.startswith("#")]
    return build_corpus(items, threads=threads)


# ---------------------------------------------------------------- output


def affiliation_to_json(entry: AffiliationEntry, reason: str | None = None) -> dict:
    if not entry.parsed:
        return {"raw": entry.raw}
    out = {"raw": entry.raw, "institution": entry.institution, "locality": entry.locality_name}
    if entry.admin_name is not None:
        out["admin"] = entry.admin_name
    out["country"] = entry.country_name
    if entry.resolved_locality is not None:
        out["locality_id"] = entry.resolved_locality
    if reason:
        out["unresolved"] = reason
    return out


def to_jsonl(corpus: Corpus) -> str:
    reasons = {(rid, idx): reason for rid, idx, reason in corpus.unresolved}
    dumps = json.JSONEncoder(ensure_ascii=False, separators=(",", ":")).encode
    # entries are heavily shared between records, so encode each one once
    fragments: dict = {}
    lines = []
    for rec in corpus.records:
        parts = []
        for i, e in enumerate(rec.affiliations):
            reason = reasons.get((rec.id, i)) if reasons and e.parsed else None
            key = (id(e), reason)
            frag = fragments.get(key)
            if frag is None:
                frag = fragments[key] = dumps(affiliation_to_json(e, reason))
            parts.append(frag)
        lines.append(f'{{"id":{dumps(rec.id)},"year":{rec.year},"affiliations":[{",".join(parts)}]}}\n')
    return "".join(lines)


def write_jsonl(corpus: Corpus, path: str | os.PathLike, meta: dict | None = None) -> None:
    """Records one per line, preceded by ``# key: value`` comment lines (skipped on ingest)."""
    atomic_write_text(path, "".join(line + "\n" for line in header_lines(meta or {})) + to_jsonl(corpus))


def quarantine_csv(corpus: Corpus, meta: dict | None = None) -> str:
    rows = [
        (q.record_id, q.line_no, f"{q.reason} [{q.source}]" if q.source else q.reason)
        for q in corpus.quarantine
    ]
    return render_csv(["record_id", "line_no", "reason"], rows, meta)


def unresolved_csv(corpus: Corpus, meta: dict | None = None) -> str:
    by_id = corpus.by_id
    rows = [
        (rid, idx, by_id[rid].affiliations[idx].raw, reason)
        for rid, idx, reason in corpus.unresolved
    ]
    return render_csv(["record_id", "affiliation_index", "raw", "reason"], rows, meta)
