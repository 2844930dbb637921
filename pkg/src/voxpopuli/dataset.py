"""Competition entries: ingestion, unit conversion, ranking and summaries.

Entry files are CSV with one of two headers::

    weight_lb            # mode A, pounds
    cwt,qr,lb            # mode B, hundredweights / quarters / pounds

An optional ``id`` column is accepted and ignored.  Lines starting with ``#``
are comments; ``# outcome: <lbs>`` attaches the known outcome.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .errors import DomainError, IngestError

log = logging.getLogger(__name__)

LB_PER_CWT = 112
LB_PER_QR = 28

POUNDS_COLUMNS = ("weight_lb",)
IMPERIAL_COLUMNS = ("cwt", "qr", "lb")
TABLE_COLUMNS = ("percent", "weight_lb")
OPTIONAL_COLUMNS = ("id",)


def to_pounds(cwt: int, qr: int, lb: int) -> int:
    """Convert hundredweights, quarters and pounds to pounds."""
    for name, v in (("cwt", cwt), ("qr", qr), ("lb", lb)):
        if int(v) != v or v < 0:
            raise DomainError(f"{name} must be a nonnegative integer, got {v!r}")
    return LB_PER_CWT * int(cwt) + LB_PER_QR * int(qr) + int(lb)


@dataclass(frozen=True)
class EntrySet:
    """Validated competition entries, sorted ascending (ties preserved)."""

    values: np.ndarray
    rejected: int = 0
    outcome: Optional[float] = None
    source: str = ""
    rejected_lines: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise IngestError("an entry set needs at least one value")
        if not np.all(np.isfinite(v)):
            raise IngestError("entry values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values: Iterable[float], outcome: Optional[float] = None, source: str = "") -> EntrySet:
        return cls(np.fromiter(values, dtype=float), outcome=outcome, source=source)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def with_outcome(self, outcome: Optional[float]) -> EntrySet:
        return EntrySet(self.values, self.rejected, outcome, self.source, self.rejected_lines)

    def transformed(self, a: float, b: float) -> EntrySet:
        """The entries mapped through ``y -> a + b*y`` (``b > 0``)."""
        if not b > 0:
            raise DomainError("scale factor must be positive")
        outcome = None if self.outcome is None else a + b * self.outcome
        return EntrySet(a + b * self.values, self.rejected, outcome, self.source, self.rejected_lines)


# -- ingestion -----------------------------------------------------------------


def _parse_outcome_comment(line: str) -> Optional[float]:
    body = line.lstrip("#").strip()
    key, sep, value = body.partition(":")
    if sep and key.strip().lower() == "outcome":
        try:
            return float(value)
        except ValueError:
            raise IngestError(f"unreadable outcome comment: {line.strip()!r}") from None
    return None


def _nonneg_number(text: str) -> float:
    v = float(text)
    if not math.isfinite(v) or v < 0:
        raise ValueError(text)
    return v


def _nonneg_int(text: str) -> int:
    v = _nonneg_number(text)
    if v != int(v):
        raise ValueError(text)
    return int(v)


def _split_comments(stream: TextIO) -> tuple[list[tuple[int, str]], list[str]]:
    rows, comments = [], []
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comments.append(stripped)
            continue
        rows.append((lineno, line))
    return rows, comments


def _open(source: Union[str, os.PathLike, TextIO]) -> tuple[TextIO, str, bool]:
    if hasattr(source, "read"):
        return source, getattr(source, "name", "<stream>"), False
    return open(source, newline="", encoding="utf-8"), os.fspath(source), True


def ingest(
    source: Union[str, os.PathLike, TextIO],
    units: Optional[str] = None,
    outcome: Optional[float] = None,
) -> EntrySet:
    """Read an entry CSV.

    ``units`` forces ``"lb"`` (mode A) or ``"cwt"`` (mode B); by default the
    header decides.  Invalid rows (empty, non-numeric, negative, wrong field
    count) are counted in ``rejected``.  An explicit ``outcome`` overrides a
    ``# outcome:`` comment.
    """
    stream, label, owned = _open(source)
    try:
        rows, comments = _split_comments(stream)
    finally:
        if owned:
            stream.close()

    file_outcome = None
    for c in comments:
        parsed = _parse_outcome_comment(c)
        if parsed is not None:
            file_outcome = parsed
    if not rows:
        raise IngestError(f"{label}: no header or data rows")

    header_line, header = rows[0]
    columns = [c.strip().lower() for c in next(csv.reader([header]))]
    unknown = [c for c in columns if c not in POUNDS_COLUMNS + IMPERIAL_COLUMNS + OPTIONAL_COLUMNS]
    if unknown:
        raise IngestError(f"{label}: unknown column(s) {', '.join(unknown)} in header on line {header_line}")
    data_cols = [c for c in columns if c not in OPTIONAL_COLUMNS]
    if set(data_cols) == set(POUNDS_COLUMNS) and len(data_cols) == 1:
        mode = "lb"
    elif sorted(data_cols) == sorted(IMPERIAL_COLUMNS):
        mode = "cwt"
    else:
        raise IngestError(f"{label}: header must be 'weight_lb' or 'cwt,qr,lb', got {header.strip()!r}")
    if units is not None and units != mode:
        raise IngestError(f"{label}: --units {units} does not match the file header ({mode})")

    index = {c: i for i, c in enumerate(columns)}
    values: list[float] = []
    bad: list[int] = []
    for lineno, line in rows[1:]:
        fields = next(csv.reader([line]), [])
        try:
            if len(fields) != len(columns):
                raise ValueError("field count")
            if mode == "lb":
                values.append(_nonneg_number(fields[index["weight_lb"]]))
            else:
                values.append(float(to_pounds(*(_nonneg_int(fields[index[c]]) for c in IMPERIAL_COLUMNS))))
        except (ValueError, DomainError):
            bad.append(lineno)
            log.debug("%s: rejected line %d: %r", label, lineno, line.rstrip("\n"))

    if not values:
        first = f"; first bad row is line {bad[0]}" if bad else ""
        raise IngestError(f"{label}: no valid entries{first}")
    if bad:
        log.info("%s: rejected %d row(s), first on line %d", label, len(bad), bad[0])
    return EntrySet(
        np.asarray(values),
        rejected=len(bad),
        outcome=outcome if outcome is not None else file_outcome,
        source=label,
        rejected_lines=tuple(bad),
    )


def format_number(x: float) -> str:
    """Integral values without a decimal point, others with round-trip repr."""
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def write_entries(data: EntrySet, target: Union[str, os.PathLike, TextIO], extra_comments: Iterable[str] = ()) -> None:
    """Write a mode-A entry CSV that :func:`ingest` reads back identically."""
    lines = [f"# {c}" for c in extra_comments]
    if data.outcome is not None:
        lines.append(f"# outcome: {format_number(data.outcome)}")
    lines.append("weight_lb")
    lines.extend(format_number(v) for v in data.values)
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


# -- order statistics ----------------------------------------------------------


def percentile(data: EntrySet, p: float) -> float:
    """Percentile with rank ``r = (n + 1) p``, interpolating between order statistics.

    Ranks outside ``[1, n]`` clamp to the extremes.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    v = data.values
    r = (data.n + 1) * p
    r = min(max(r, 1.0), float(data.n))
    lo = int(math.floor(r))
    frac = r - lo
    if frac == 0.0 or lo >= data.n:
        return float(v[lo - 1])
    return float(v[lo - 1] + frac * (v[lo] - v[lo - 1]))


def rank_of(n: int, p: float) -> float:
    """The (possibly fractional) rank used by :func:`percentile` for ``n`` entries."""
    return (n + 1) * p


TABLE_PERCENTS = tuple(range(5, 100, 5))


def percentile_table(data: EntrySet) -> list[tuple[int, float]]:
    """Percentiles at 5, 10, ..., 95 per cent; also the ogive (inverse CDF) points."""
    if data.n < 20:
        raise DomainError(f"a percentile table needs at least 20 entries, got {data.n}")
    return [(pc, percentile(data, pc / 100.0)) for pc in TABLE_PERCENTS]


def read_percentile_table(source: Union[str, os.PathLike, TextIO]) -> list[tuple[float, float]]:
    """Read a ``percent,weight_lb`` table CSV."""
    stream, label, owned = _open(source)
    try:
        rows, _ = _split_comments(stream)
    finally:
        if owned:
            stream.close()
    if not rows:
        raise IngestError(f"{label}: empty percentile table")
    columns = [c.strip().lower() for c in next(csv.reader([rows[0][1]]))]
    if columns != list(TABLE_COLUMNS):
        raise IngestError(f"{label}: percentile table header must be 'percent,weight_lb'")
    table = []
    for lineno, line in rows[1:]:
        fields = next(csv.reader([line]), [])
        try:
            pc, w = float(fields[0]), float(fields[1])
        except (ValueError, IndexError):
            raise IngestError(f"{label}: bad percentile row on line {lineno}") from None
        if not 0 < pc < 100:
            raise IngestError(f"{label}: percent out of range on line {lineno}")
        table.append((pc, w))
    if not table:
        raise IngestError(f"{label}: percentile table has no rows")
    return table


def write_percentile_table(table: Iterable[tuple[float, float]], target: TextIO) -> None:
    target.write(",".join(TABLE_COLUMNS) + "\n")
    for pc, w in table:
        target.write(f"{format_number(pc)},{format_number(w)}\n")


def is_percentile_table(path: Union[str, os.PathLike]) -> bool:
    with open(path, encoding="utf-8") as fh:
        rows, _ = _split_comments(fh)
    if not rows:
        return False
    return [c.strip().lower() for c in rows[0][1].split(",")] == list(TABLE_COLUMNS)


# -- histogram -----------------------------------------------------------------

DEFAULT_BIN_WIDTH = 20.0


@dataclass(frozen=True)
class HistogramSpec:
    bin_width: float = DEFAULT_BIN_WIDTH
    origin: Optional[float] = None  # None: multiple of bin_width at or below the minimum

    def __post_init__(self) -> None:
        if not self.bin_width > 0:
            raise DomainError(f"bin width must be positive, got {self.bin_width!r}")


@dataclass(frozen=True)
class Histogram:
    bin_width: float
    origin: float
    edges: tuple[float, ...]
    counts: tuple[int, ...]
    n: int = field(default=0)

    @property
    def bins(self) -> list[tuple[float, int]]:
        return list(zip(self.edges, self.counts))

    @property
    def densities(self) -> tuple[float, ...]:
        return tuple(c / (self.n * self.bin_width) for c in self.counts)


def histogram(data: EntrySet, spec: HistogramSpec = HistogramSpec()) -> Histogram:
    """Half-open bins ``[edge, edge + width)`` spanning the data, anchored at ``origin``."""
    w = float(spec.bin_width)
    origin = spec.origin if spec.origin is not None else math.floor(data.values[0] / w) * w
    idx = np.floor((data.values - origin) / w).astype(np.int64)
    first, last = int(idx[0]), int(idx[-1])
    counts = np.bincount(idx - first, minlength=last - first + 1)
    edges = tuple(float(origin + w * i) for i in range(first, last + 1))
    return Histogram(w, float(origin), edges, tuple(int(c) for c in counts), data.n)
