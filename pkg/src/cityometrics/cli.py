"""Command-line entry point: ``cityometrics <command> ...``.

Commands compose through files: ``ingest`` -> ``resolve`` -> ``delineate`` ->
``count`` / ``collab`` / ``report`` / ``mismatch``. The config-driven
commands take ``--config run.json`` (JSON, or ``key = value`` lines) plus
``--set key=value`` overrides. Every output is written atomically and starts
with a ``#`` header block carrying the tool version, a config hash and input
content hashes (no timestamps, so reruns are byte-identical).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from . import collab, counting, delineation, fixtures, gazetteer, records, report
from ._io import atomic_write_text, resolve_threads, sha256_bytes, sha256_file
from .errors import CityometricsError, ConfigError, EmptyCorpus

log = logging.getLogger("cityometrics")

STRATEGIES = ("identity", "lookup", "distance", "travel_time")
ALL_REGIMES = ("integer", "integer_sum", "dedup", "fractional")
_PATH_KEYS = ("gazetteer_path", "membership_path", "institution_path", "travel_time_path", "aliases_path")


@dataclass
class RunConfig:
    corpus_paths: list = field(default_factory=list)
    gazetteer_path: str | None = None
    membership_path: str | None = None
    institution_path: str | None = None
    travel_time_path: str | None = None
    aliases_path: str | None = None
    strategy: str = "identity"
    tier: str = "CSA"
    threshold_km: float = 40.0
    core_population: int | None = None
    threshold_minutes: float = 45.0
    travel_time_base: str = "lookup"
    regimes: list = field(default_factory=lambda: list(ALL_REGIMES))
    year_range: list | None = None
    fractional_basis: str = "distinct_locality"
    tolerance: float = 0.0
    output_dir: str = "out"
    seed: int = 0
    top_n: int = 25
    metro: str | None = None
    pair: list | None = None
    city: str | None = None
    include_diagonal: bool = True
    format: str = "both"

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        errors = [f"unknown key {k!r}" for k in sorted(data) if k not in known]
        values = {}
        for key, raw in data.items():
            if key not in known:
                continue
            try:
                values[key] = _coerce(key, raw)
            except (TypeError, ValueError) as exc:
                errors.append(f"{key}: {exc}")
        cfg = cls(**values)
        if base_dir is not None:
            cfg.corpus_paths = [str(base_dir / p) for p in cfg.corpus_paths]
            for key in _PATH_KEYS:
                if getattr(cfg, key):
                    setattr(cfg, key, str(base_dir / getattr(cfg, key)))
            cfg.output_dir = str(base_dir / cfg.output_dir)
        errors.extend(cfg.problems())
        if errors:
            raise ConfigError(f"{len(errors)} config problem(s): " + "; ".join(errors), errors)
        return cfg

    def problems(self) -> list[str]:
        """Every violation, not just the first."""
        out = []
        if not self.corpus_paths:
            out.append("corpus_paths is empty")
        for p in self.corpus_paths:
            if not os.path.exists(p):
                out.append(f"corpus path does not exist: {p}")
        for key in _PATH_KEYS:
            p = getattr(self, key)
            if p and not os.path.exists(p):
                out.append(f"{key} does not exist: {p}")
        if not self.gazetteer_path:
            out.append("gazetteer_path is required")
        if self.strategy not in STRATEGIES:
            out.append(f"strategy must be one of {', '.join(STRATEGIES)}")
        if self.strategy == "lookup" or (self.strategy == "travel_time" and self.travel_time_base == "lookup"):
            if not self.membership_path:
                out.append("lookup delineation needs membership_path")
            if self.tier not in gazetteer.TIERS:
                out.append(f"tier must be one of {', '.join(gazetteer.TIERS)}")
        # ranges are checked even when the strategy ignores the value
        if not self.threshold_km > 0:
            out.append("threshold_km must be positive")
        if self.core_population is not None and self.core_population <= 0:
            out.append("core_population must be positive")
        if not self.threshold_minutes > 0:
            out.append("threshold_minutes must be positive")
        if self.travel_time_base not in ("lookup", "distance"):
            out.append("travel_time_base must be 'lookup' or 'distance'")
        if self.strategy == "travel_time" and not self.travel_time_path:
            out.append("travel_time strategy needs travel_time_path")
        bad = [r for r in self.regimes if r not in ALL_REGIMES]
        if bad:
            out.append(f"unknown regimes: {', '.join(bad)}")
        if self.fractional_basis not in counting.BASES:
            out.append(f"fractional_basis must be one of {', '.join(counting.BASES)}")
        if self.year_range is not None and (len(self.year_range) != 2 or self.year_range[0] > self.year_range[1]):
            out.append("year_range must be [first, last] with first <= last")
        if not 0.0 <= self.tolerance <= 1.0:
            out.append("tolerance must be within [0, 1]")
        if self.top_n < 1:
            out.append("top_n must be >= 1")
        if self.pair is not None and len(self.pair) != 2:
            out.append("pair must name two metros")
        if self.format not in ("csv", "text", "both"):
            out.append("format must be csv, text or both")
        return out

    @property
    def years(self) -> tuple[int, int] | None:
        return None if self.year_range is None else (int(self.year_range[0]), int(self.year_range[1]))

    def parameters(self) -> dict:
        """Analysis parameters without file locations."""
        d = asdict(self)
        for key in ("corpus_paths", "output_dir", *_PATH_KEYS):
            d.pop(key)
        return d


_LIST_KEYS = {"corpus_paths", "regimes", "year_range", "pair"}
_INT_KEYS = {"core_population", "seed", "top_n"}
_FLOAT_KEYS = {"threshold_km", "threshold_minutes", "tolerance"}


def _coerce(key: str, raw):
    if raw is None:
        return None
    if key in _LIST_KEYS:
        if isinstance(raw, str):
            raw = [p.strip() for p in raw.split(",") if p.strip()]
        if not isinstance(raw, list):
            raise TypeError("expected a list")
        return [int(v) for v in raw] if key == "year_range" else [str(v) for v in raw]
    if key in _INT_KEYS:
        if isinstance(raw, bool):
            raise TypeError("expected an integer")
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key == "include_diagonal":
        if isinstance(raw, bool):
            return raw
        if str(raw).lower() in ("true", "1", "yes"):
            return True
        if str(raw).lower() in ("false", "0", "no"):
            return False
        raise ValueError("expected true/false")
    return str(raw)


def parse_config_text(text: str) -> dict:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key = value", [n])
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | None, overrides: list[str]) -> RunConfig:
    data: dict = {}
    base = None
    if path:
        base = Path(path).resolve().parent
        data = parse_config_text(Path(path).read_text(encoding="utf-8"))
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        data[key.strip()] = value.strip()
    return RunConfig.from_mapping(data, base)


# ---------------------------------------------------------------- pipeline context


class Context:
    """Loads inputs lazily and stamps outputs with provenance headers."""

    def __init__(self, cfg: RunConfig, threads: int):
        self.cfg = cfg
        self.threads = threads
        self._cache: dict = {}
        self.out = Path(cfg.output_dir)

    def _once(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def registry(self) -> gazetteer.Gazetteer:
        return self._once("registry", lambda: gazetteer.load_gazetteer(self.cfg.gazetteer_path, self.cfg.aliases_path))

    @property
    def institutions(self) -> gazetteer.InstitutionRegistry:
        if not self.cfg.institution_path:
            raise ConfigError("this command needs institution_path")
        return self._once("inst", lambda: gazetteer.load_institutions(self.cfg.institution_path, self.registry))

    @property
    def corpus(self) -> records.Corpus:
        def build():
            raw = records.ingest(self.cfg.corpus_paths, threads=self.threads)
            if len(raw) == 0:
                raise EmptyCorpus("empty corpus")
            return gazetteer.resolve_corpus(raw, self.registry)
        return self._once("corpus", build)

    @property
    def partition(self) -> delineation.Partition:
        return self._once("partition", lambda: build_partition(self.cfg, self.registry))

    def input_hashes(self) -> dict:
        def build():
            out = {}
            for key in _PATH_KEYS:
                p = getattr(self.cfg, key)
                if p:
                    out[key.removesuffix("_path") + "_hash"] = sha256_file(p)
            return out
        return self._once("hashes", build)

    def header(self, with_corpus: bool = True) -> dict:
        inputs = dict(self.input_hashes())
        if with_corpus:
            inputs = {"corpus_hash": self.corpus.fingerprint, **inputs}
        cfg_blob = json.dumps({"parameters": self.cfg.parameters(), "inputs": inputs}, sort_keys=True)
        return {"tool": f"cityometrics {__version__}", "config_hash": sha256_bytes(cfg_blob.encode()), **inputs}

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        atomic_write_text(path, text)
        log.info("wrote %s", path)
        return path


def build_partition(cfg: RunConfig, registry: gazetteer.Gazetteer) -> delineation.Partition:
    if cfg.strategy == "identity":
        return delineation.Partition.identity(registry)

    def lookup():
        table = gazetteer.load_memberships(cfg.membership_path, registry)
        return delineation.delineate_lookup(registry, table, cfg.tier)

    def distance():
        return delineation.delineate_distance(registry, cfg.threshold_km, cfg.core_population)

    if cfg.strategy == "lookup":
        part = lookup()
    elif cfg.strategy == "distance":
        part = distance()
    else:
        base = lookup() if cfg.travel_time_base == "lookup" else distance()
        edges = gazetteer.load_travel_times(cfg.travel_time_path, registry)
        part = delineation.delineate_travel_time(base, edges, cfg.threshold_minutes, registry)
    delineation.check_partition(part, registry)
    return part


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    corpus = records.ingest(args.paths, fmt=args.format, threads=resolve_threads(args.threads))
    meta = {"tool": f"cityometrics {__version__}", "corpus_hash": corpus.fingerprint,
            "records": len(corpus), "quarantined": len(corpus.quarantine)}
    records.write_jsonl(corpus, args.out, meta)
    quarantine = args.quarantine or str(Path(args.out).with_suffix("")) + ".quarantine.csv"
    atomic_write_text(quarantine, records.quarantine_csv(corpus, meta))
    print(json.dumps({"records": len(corpus), "quarantined": len(corpus.quarantine),
                      "unresolved": len(corpus.unresolved)}))
    return 0


def cmd_resolve(args) -> int:
    corpus = records.ingest(args.corpus, threads=resolve_threads(args.threads))
    registry = gazetteer.load_gazetteer(args.gazetteer, args.aliases)
    resolved = gazetteer.resolve_corpus(corpus, registry)
    meta = {"tool": f"cityometrics {__version__}", "corpus_hash": resolved.fingerprint,
            "gazetteer_hash": sha256_file(args.gazetteer)}
    if args.aliases:
        meta["aliases_hash"] = sha256_file(args.aliases)
    records.write_jsonl(resolved, args.out, meta)
    unresolved = args.unresolved or str(Path(args.out).with_suffix("")) + ".unresolved.csv"
    atomic_write_text(unresolved, records.unresolved_csv(resolved, meta))
    print(json.dumps({"records": len(resolved), "unresolved": len(resolved.unresolved)}))
    return 0


def cmd_delineate(ctx: Context) -> int:
    part = ctx.partition
    meta = ctx.header(with_corpus=False)
    ctx.write("partition.csv", delineation.partition_csv(part, meta))
    if part.skipped_edges:
        rows = "".join(f"{e.a},{e.b},{e.minutes:g}\n" for e in part.skipped_edges)
        ctx.write("skipped_edges.csv", "locality_a,locality_b,minutes\n" + rows)
    return 0


def _count_reports(ctx: Context) -> dict[str, counting.CountReport]:
    cfg, corpus, part = ctx.cfg, ctx.corpus, ctx.partition
    kw = dict(year_range=cfg.years, tolerance=cfg.tolerance, threads=ctx.threads)
    out = {}
    loc = counting.integer_count(corpus, **kw)
    if "integer" in cfg.regimes or "integer_sum" in cfg.regimes:
        out["locality_integer"] = loc
    if "integer_sum" in cfg.regimes:
        out["metro_integer_sum"] = counting.metro_integer_sum(loc, part)
    if "dedup" in cfg.regimes:
        out["metro_dedup"] = counting.dedup_count(corpus, part, **kw)
    if "fractional" in cfg.regimes:
        out["metro_fractional"] = counting.fractional_count(
            corpus, counting.AttributionPolicy(cfg.fractional_basis, part), **kw)
    return out


def cmd_count(ctx: Context) -> int:
    meta = ctx.header()
    for name, rep in _count_reports(ctx).items():
        ctx.write(f"count_{name}.csv", rep.to_csv(meta))
    return 0


def cmd_collab(ctx: Context) -> int:
    cfg, corpus, part = ctx.cfg, ctx.corpus, ctx.partition
    meta = ctx.header()
    kw = dict(year_range=cfg.years, tolerance=cfg.tolerance, threads=ctx.threads)
    for regime in ("integer", "fractional"):
        loc = collab.dyad_matrix(corpus, None, regime, **kw)
        ctx.write(f"dyads_locality_{regime}.csv", loc.to_csv(meta))
        metro = collab.dyad_matrix(corpus, part, regime, include_diagonal=cfg.include_diagonal, **kw)
        ctx.write(f"dyads_metro_{regime}.csv", metro.to_csv(meta))
    if cfg.pair:
        exp = collab.expand_links(corpus, part, tuple(cfg.pair), year_range=cfg.years, tolerance=cfg.tolerance)
        ctx.write(f"links_{cfg.pair[0]}__{cfg.pair[1]}.csv", exp.to_csv(meta))
    if cfg.city and cfg.institution_path:
        mat = collab.intra_city_matrix(corpus, cfg.city, ctx.institutions, part, year_range=cfg.years)
        ctx.write(f"intra_city_{cfg.city}.csv", mat.to_csv(meta))
    return 0


def _pick_metros(ctx: Context, dedup: counting.CountReport) -> list[delineation.MetroArea]:
    part = ctx.partition
    if ctx.cfg.metro:
        if ctx.cfg.metro not in part.by_id:
            raise ConfigError(f"metro {ctx.cfg.metro!r} is not in the partition")
        return [part.by_id[ctx.cfg.metro]]
    multi = [m for m in part.metros if len(m.members) > 1]
    multi.sort(key=lambda m: (-dedup.get(m.id), m.id))
    return multi[:1]


def cmd_report(ctx: Context) -> int:
    cfg = ctx.cfg
    meta = ctx.header()
    kw = dict(year_range=cfg.years, tolerance=cfg.tolerance, threads=ctx.threads)
    corpus, part = ctx.corpus, ctx.partition
    loc = counting.integer_count(corpus, **kw)
    isum = counting.metro_integer_sum(loc, part)
    dedup = counting.dedup_count(corpus, part, **kw)
    frac = counting.fractional_count(corpus, counting.AttributionPolicy(cfg.fractional_basis, part), **kw)
    for metro in _pick_metros(ctx, dedup):
        table = report.ranked_table(metro, loc, dedup, frac, cfg.top_n, ctx.registry, part)
        if cfg.format in ("csv", "both"):
            ctx.write(f"ranked_{metro.id}.csv", table.to_csv(meta))
        if cfg.format in ("text", "both"):
            ctx.write(f"ranked_{metro.id}.txt", "".join(f"{l}\n" for l in _hdr(meta)) + table.render_text())
    wanted = {"integer_sum": isum, "dedup": dedup, "fractional": frac}
    chosen = [wanted[r] for r in cfg.regimes if r in wanted]
    if len(chosen) >= 2:
        summary = report.regime_summary(chosen)
        if cfg.format in ("csv", "both"):
            ctx.write("regime_summary.csv", summary.to_csv(meta))
        if cfg.format in ("text", "both"):
            ctx.write("regime_summary.txt", "".join(f"{l}\n" for l in _hdr(meta)) + summary.render_text())
    return 0


def _hdr(meta: dict) -> list[str]:
    from ._io import header_lines
    return header_lines(meta)


def cmd_mismatch(ctx: Context) -> int:
    rep = counting.hq_mismatch(ctx.corpus, ctx.institutions, ctx.cfg.years)
    meta = ctx.header()
    ctx.write("mismatch.csv", rep.to_csv(meta))
    ctx.write("mismatch_unmatched.csv", rep.unmatched_csv(meta))
    if ctx.cfg.format in ("text", "both"):
        ctx.write("mismatch.txt", "".join(f"{l}\n" for l in _hdr(meta)) + rep.render_text())
    return 0


def cmd_run(ctx: Context) -> int:
    cmd_delineate(ctx)
    cmd_count(ctx)
    cmd_collab(ctx)
    cmd_report(ctx)
    if ctx.cfg.institution_path:
        cmd_mismatch(ctx)
    return 0


def cmd_fixture(args) -> int:
    kwargs = {}
    if args.records is not None:
        kwargs["n_records" if args.profile == "throughput" else "n_papers"] = args.records
    fx = fixtures.make(args.profile, args.seed, **kwargs)
    paths = fx.write(args.out)
    print(json.dumps({k: str(v) for k, v in sorted(paths.items())}))
    return 0


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cityometrics", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cityometrics {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read corpus files into one normalised JSONL corpus")
    p.add_argument("paths", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("jsonl", "csv"))
    p.add_argument("--quarantine")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("resolve", help="attach gazetteer locality ids to affiliations")
    p.add_argument("corpus", nargs="+")
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--aliases")
    p.add_argument("--out", required=True)
    p.add_argument("--unresolved")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_resolve)

    for name, func, help_text in (
        ("delineate", cmd_delineate, "build a metro partition"),
        ("count", cmd_count, "publication credits under each regime"),
        ("collab", cmd_collab, "collaboration dyad matrices"),
        ("report", cmd_report, "ranked settlement table and regime summary"),
        ("mismatch", cmd_mismatch, "headquarters attribution mismatch"),
        ("run", cmd_run, "delineate, count, collab, report and mismatch in one go"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--output-dir")
        p.add_argument("--threads", type=int)
        p.set_defaults(func=func, needs_context=True)

    p = sub.add_parser("fixture", help="write a seeded synthetic fixture")
    p.add_argument("--profile", required=True, choices=fixtures.PROFILES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "needs_context", False):
            overrides = list(args.set)
            if args.output_dir:
                overrides.append(f"output_dir={args.output_dir}")
            cfg = load_config(args.config, overrides)
            if args.output_dir:
                cfg.output_dir = args.output_dir
            return args.func(Context(cfg, resolve_threads(args.threads)))
        return args.func(args)
    except CityometricsError as exc:
        err = {"error": exc.code, "message": str(exc), "details": exc.details}
        print(json.dumps(err, default=str), file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "details": []}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
