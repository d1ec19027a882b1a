"""Ranked settlement tables and cross-regime comparison summaries."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from ._io import format_number, render_csv
from .counting import CountReport, _sum_members, percent
from .delineation import MetroArea, Partition
from .errors import ReportMismatch
from .gazetteer import Gazetteer

DEFAULT_TOP_N = 25


def _same(reports: Sequence[CountReport], attr: str) -> None:
    values = {getattr(r, attr) for r in reports}
    if len(values) > 1:
        raise ReportMismatch(f"reports disagree on {attr}: {sorted(map(str, values))}")


@dataclass(frozen=True)
class RankedRow:
    rank: int
    locality_id: str
    name: str
    settlement_type: str
    credit: int


@dataclass(frozen=True)
class RankedTable:
    metro_id: str
    rows: tuple[RankedRow, ...]
    integer_sum_total: int
    dedup_total: int
    fractional_total: float
    member_count: int
    corpus_hash: str | None = None

    @property
    def dedup_over_integer_ratio(self) -> float:
        return self.dedup_total / self.integer_sum_total if self.integer_sum_total else float("nan")

    @property
    def ratio_display(self) -> str:
        return percent(self.dedup_total, self.integer_sum_total)

    def to_csv(self, meta: dict | None = None) -> str:
        rows = [(r.rank, r.locality_id, r.name, r.settlement_type, r.credit) for r in self.rows]
        header = {
            **(meta or {}),
            "metro_id": self.metro_id,
            "corpus_hash": self.corpus_hash,
            "member_localities": self.member_count,
            "integer_sum_total": self.integer_sum_total,
            "dedup_total": self.dedup_total,
            "fractional_total": format_number(self.fractional_total),
            "dedup_over_integer_ratio": format_number(self.dedup_over_integer_ratio),
        }
        return render_csv(["rank", "locality_id", "name", "settlement_type", "credit"], rows, header)

    def render_text(self) -> str:
        name_w = max([len("Settlement")] + [len(r.name) for r in self.rows])
        type_w = max([len("Type")] + [len(r.settlement_type) for r in self.rows])
        num_w = max(len("Publications"), len(f"{self.integer_sum_total:,}"))
        lines = [f"Metro {self.metro_id} ({self.member_count} member localities)",
                 f"{'Rank':>4}  {'Settlement':<{name_w}}  {'Type':<{type_w}}  {'Publications':>{num_w}}"]
        for r in self.rows:
            lines.append(f"{r.rank:>4}  {r.name:<{name_w}}  {r.settlement_type:<{type_w}}  {r.credit:>{num_w},}")
        label_w = 4 + 2 + name_w + 2 + type_w
        lines.append(f"{'Integer sum (all members)':<{label_w}}  {self.integer_sum_total:>{num_w},}")
        lines.append(f"{'Deduplicated (OR)':<{label_w}}  {self.dedup_total:>{num_w},}")
        lines.append(f"{'Fractional':<{label_w}}  {self.fractional_total:>{num_w},.2f}")
        lines.append(f"{'Dedup / integer sum':<{label_w}}  {self.ratio_display:>{num_w}}")
        return "\n".join(lines) + "\n"


def ranked_table(
    metro: MetroArea,
    locality_report: CountReport,
    dedup_report: CountReport,
    fractional_report: CountReport,
    top_n: int = DEFAULT_TOP_N,
    registry: Gazetteer | None = None,
    partition: Partition | None = None,
) -> RankedTable:
    """Top member localities of one metro by integer credit, with metro-wide footer totals."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    reports = (locality_report, dedup_report, fractional_report)
    _same(reports, "corpus_hash")
    _same(reports, "year_filter")
    _same((dedup_report, fractional_report), "partition_hash")
    if locality_report.unit_kind != "locality" or locality_report.regime != "integer":
        raise ReportMismatch("locality_report must be a locality-level integer report")
    if dedup_report.regime != "dedup" or fractional_report.regime != "fractional":
        raise ReportMismatch("expected a dedup report and a fractional report")
    if partition is not None and dedup_report.partition_hash not in (None, partition.fingerprint):
        raise ReportMismatch("dedup report was computed over a different partition")

    members = metro.members
    ranked = sorted(
        ((loc, c) for loc, c in locality_report.credits.items() if loc in members and c > 0),
        key=lambda kv: (-kv[1], kv[0]),
    )
    rows = []
    for rank, (loc, credit) in enumerate(ranked[:top_n], start=1):
        place = registry[loc] if registry is not None and loc in registry else None
        rows.append(RankedRow(rank, loc, place.name if place else loc,
                              place.settlement_type if place else "", credit))
    only_members = Partition((metro,))
    member_credits = {loc: c for loc, c in locality_report.credits.items() if loc in members}
    integer_sum = _sum_members(member_credits, only_members).get(metro.id, 0)
    return RankedTable(
        metro.id, tuple(rows), integer_sum, dedup_report.get(metro.id),
        fractional_report.get(metro.id), len(members), locality_report.corpus_hash,
    )


# ---------------------------------------------------------------- regime summary


@dataclass(frozen=True)
class RegimeSummary:
    labels: tuple[str, ...]
    rows: tuple[tuple[str, tuple[float, ...]], ...]
    totals: tuple[float, ...]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(combinations(range(len(self.labels)), 2))

    @staticmethod
    def _ratio(values, i, j):
        return values[j] / values[i] if values[i] else None

    def ratios(self, unit: str) -> dict[str, float | None]:
        values = dict(self.rows)[unit]
        return {f"{self.labels[j]}/{self.labels[i]}": self._ratio(values, i, j) for i, j in self.pairs}

    def total_ratios(self) -> dict[str, float | None]:
        return {f"{self.labels[j]}/{self.labels[i]}": self._ratio(self.totals, i, j) for i, j in self.pairs}

    def to_csv(self, meta: dict | None = None) -> str:
        cols = ["unit_id", *self.labels, *[f"{self.labels[j]}/{self.labels[i]}" for i, j in self.pairs]]

        def fmt(values):
            ratios = [self._ratio(values, i, j) for i, j in self.pairs]
            return [format_number(v) for v in values] + ["" if r is None else format_number(r) for r in ratios]

        body = [(unit, *fmt(values)) for unit, values in self.rows]
        body.append(("TOTAL", *fmt(self.totals)))
        return render_csv(cols, body, meta)

    def render_text(self) -> str:
        pair_labels = [f"{self.labels[j]}/{self.labels[i]}" for i, j in self.pairs]
        heads = ["unit", *self.labels, *pair_labels]
        table = []
        for unit, values in (*self.rows, ("TOTAL", self.totals)):
            cells = [unit] + [_fmt_credit(v) for v in values]
            for i, j in self.pairs:
                cells.append("-" if not values[i] else percent(Fraction(values[j]), Fraction(values[i])))
            table.append(cells)
        widths = [max(len(h), *(len(r[k]) for r in table)) for k, h in enumerate(heads)]
        lines = ["  ".join(h.rjust(w) if k else h.ljust(w) for k, (h, w) in enumerate(zip(heads, widths)))]
        for r in table:
            lines.append("  ".join(c.rjust(w) if k else c.ljust(w) for k, (c, w) in enumerate(zip(r, widths))))
        for (i, j), label in zip(self.pairs, pair_labels):
            a, b = self.totals[i], self.totals[j]
            if a:
                excess = percent(Fraction(a) - Fraction(b), Fraction(a))
                lines.append(f"{label}: {percent(Fraction(b), Fraction(a))} of the {self.labels[i]} total "
                             f"({excess} of it is multiply counted)")
        return "\n".join(lines) + "\n"


def _fmt_credit(v) -> str:
    if isinstance(v, int):
        return f"{v:,}"
    return f"{v:,.2f}"


def regime_summary(reports: Sequence[CountReport]) -> RegimeSummary:
    """Credits of the same units under several regimes, with pairwise ratios."""
    if len(reports) < 2:
        raise ValueError("regime_summary needs at least two reports")
    for attr in ("corpus_hash", "partition_hash", "year_filter", "unit_kind"):
        _same(reports, attr)
    labels = []
    for r in reports:
        label = r.regime
        n = 2
        while label in labels:
            label = f"{r.regime}_{n}"
            n += 1
        labels.append(label)
    units = sorted(set().union(*(r.credits for r in reports)))
    rows = tuple((u, tuple(r.get(u) for r in reports)) for u in units)
    totals = tuple(r.total() for r in reports)
    return RegimeSummary(tuple(labels), rows, totals)
