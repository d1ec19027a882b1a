"""Small helpers: content hashing, header blocks, atomic writes, chunked folds."""

from __future__ import annotations

import csv
import gc
import hashlib
import io
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def format_number(value) -> str:
    """Render ints as ints and floats with the shortest round-tripping repr."""
    if isinstance(value, bool):
        raise TypeError("bool is not a credit")
    if isinstance(value, int):
        return str(value)
    if float(value).is_integer() and abs(value) < 2**53:
        return f"{value:.1f}"
    return repr(float(value))


def header_lines(meta: dict) -> list[str]:
    """``# key: value`` lines in insertion order; None values print as ``-``."""
    out = []
    for key, value in meta.items():
        out.append(f"# {key}: {'-' if value is None else value}")
    return out


def render_csv(columns: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> str:
    buf = io.StringIO()
    for line in header_lines(meta or {}):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def read_csv_skipping_header(path: str | os.PathLike) -> tuple[dict, list[dict]]:
    """Read a CSV that may start with a ``# key: value`` header block."""
    meta = {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
            body_start = i + 1
        else:
            break
    reader = csv.DictReader(lines[body_start:])
    return meta, list(reader)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def chunked(seq: Sequence[T], n: int) -> list[Sequence[T]]:
    """Split into at most ``n`` contiguous, near-equal chunks (never empty ones)."""
    n = max(1, min(int(n), len(seq) or 1))
    size, extra = divmod(len(seq), n)
    out, start = [], 0
    for i in range(n):
        stop = start + size + (1 if i < extra else 0)
        out.append(seq[start:stop])
        start = stop
    return out


def fold(
    items: Sequence[T],
    work: Callable[[Sequence[T]], R],
    merge: Callable[[R, R], R],
    threads: int = 1,
) -> R:
    """Map ``work`` over chunks and merge partials in chunk order.

    ``merge`` must be associative and commutative over exact values (ints,
    integer-numerator buckets) so the result does not depend on ``threads``.
    """
    chunks = chunked(items, threads)
    if len(chunks) == 1:
        return work(chunks[0])
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        partials = list(pool.map(work, chunks))
    result = partials[0]
    for part in partials[1:]:
        result = merge(result, part)
    return result


@contextmanager
def gc_paused():
    """Suspend the cyclic collector while building large acyclic structures."""
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def resolve_threads(value: int | None) -> int:
    """Explicit value, else CITYOMETRICS_THREADS, else 1."""
    if value is None:
        env = os.environ.get("CITYOMETRICS_THREADS", "").strip()
        value = int(env) if env else 1
    if value < 1:
        raise ValueError(f"thread count must be >= 1, got {value}")
    return value
