"""Accident and exposure data ingestion, aggregation, and report emission.

CSV inputs follow two fixed schemas:

    accidents.csv: date,operator,category,fatalities,serious_injuries
    exposure.csv:  operator,period_start,period_end,volume,unit

Dates are ISO-8601, encoding UTF-8, quoting per RFC 4180.  Parsing
either succeeds for every row or fails with a list of all offending
rows; nothing is silently dropped.

Aggregation turns records into the count-and-exposure windows the tests
consume.  Windows are half-open [start, end), so adjacent windows never
double-count.  Exposure volumes are pro-rated linearly in days using
exact rational arithmetic; the only rounding is the final conversion to
float.
"""
from __future__ import annotations

import csv
import datetime
import io
import json
import math
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from .classify import Category, Decision
from .rate_ratio import CountWindow

__all__ = [
    "AccidentRecord",
    "AggregationDetail",
    "ComparisonResult",
    "ExposureRecord",
    "FATALITY_INJURY_CORRELATIONS",
    "IngestError",
    "ReportBundle",
    "aggregate",
    "aggregate_detail",
    "emit_accidents_csv",
    "emit_exposures_csv",
    "emit_report",
    "format_fixed",
    "load_report",
    "parse_accidents",
    "parse_exposures",
    "pearson_correlation",
    "round_half_up",
]

ACCIDENT_HEADER = ["date", "operator", "category", "fatalities", "serious_injuries"]
EXPOSURE_HEADER = ["operator", "period_start", "period_end", "volume", "unit"]

# Published fatality/injury correlations (3152-accident reference study);
# display-only context for reports, never asserted against computed data.
FATALITY_INJURY_CORRELATIONS = {
    "total": 0.63400074,
    "passenger": 0.63349783,
    "level_crossing_user": 0.96474093,
    "other": 0.95331197,
}


def round_half_up(value: float, decimals: int = 0) -> float:
    """Round with ties away from zero at the given decimal place.

    Operates on the value's shortest decimal representation, so it
    matches what the number looks like when printed (0.5 -> 1, 2.45
    rounds at 1 decimal to 2.5).  Built-in round() ties to even and is
    not used for any reported figure.
    """
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def format_fixed(value: float, decimals: int = 3) -> str:
    """Fixed-point text with half-up rounding, e.g. 0.2 -> '0.200'."""
    quantum = Decimal(1).scaleb(-decimals)
    return str(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class AccidentRecord:
    date: datetime.date
    operator: str
    category: str
    fatalities: int
    serious_injuries: int

    def __post_init__(self):
        if not isinstance(self.date, datetime.date):
            raise ValueError(f"date must be a calendar date, got {self.date!r}")
        if not self.operator:
            raise ValueError("operator must be non-empty")
        if not self.category:
            raise ValueError("category must be non-empty")
        for name in ("fatalities", "serious_injuries"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class ExposureRecord:
    operator: str
    period_start: datetime.date
    period_end: datetime.date
    volume: float
    unit: str

    def __post_init__(self):
        if not self.operator:
            raise ValueError("operator must be non-empty")
        for name in ("period_start", "period_end"):
            if not isinstance(getattr(self, name), datetime.date):
                raise ValueError(f"{name} must be a calendar date")
        if self.period_end <= self.period_start:
            raise ValueError(
                f"period_end must follow period_start, got "
                f"{self.period_start}..{self.period_end}"
            )
        if not (isinstance(self.volume, (int, float)) and math.isfinite(self.volume)
                and self.volume > 0):
            raise ValueError(f"volume must be a positive finite number, got {self.volume!r}")


class IngestError(ValueError):
    """Input rejected; `row_errors` lists (line_number, message) pairs."""

    def __init__(self, message: str, row_errors: list[tuple[int, str]] | None = None):
        self.row_errors = row_errors or []
        if self.row_errors:
            details = "; ".join(f"line {ln}: {msg}" for ln, msg in self.row_errors)
            message = f"{message}: {details}"
        super().__init__(message)


def _reader(source):
    """Yield CSV rows from a path or a binary/text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            yield from csv.reader(fh)
        return
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        yield from csv.reader(io.StringIO(data, newline=""))
        return
    raise TypeError(f"expected a path or stream, got {type(source).__name__}")


def _check_header(row: list[str] | None, expected: list[str]) -> None:
    if row is None:
        raise IngestError(f"missing header; expected {','.join(expected)}")
    if len(set(row)) != len(row):
        dupes = sorted({c for c in row if row.count(c) > 1})
        raise IngestError(f"duplicate header column(s): {', '.join(dupes)}")
    if row != expected:
        raise IngestError(
            f"bad header {','.join(row)!r}; expected {','.join(expected)!r}"
        )


def _parse_rows(source, expected_header, build):
    rows = _reader(source)
    header = next(rows, None)
    _check_header(header, expected_header)
    records = []
    errors: list[tuple[int, str]] = []
    for line_no, row in enumerate(rows, start=2):
        if not row:
            continue  # blank separator lines are tolerated
        if len(row) != len(expected_header):
            errors.append((line_no, f"expected {len(expected_header)} fields, got {len(row)}"))
            continue
        try:
            records.append(build(row))
        except ValueError as exc:
            errors.append((line_no, str(exc)))
    if errors:
        raise IngestError("invalid rows", errors)
    return records


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {text!r}") from None


def _parse_date(text: str, name: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(text.strip())
    except ValueError:
        raise ValueError(f"{name} must be an ISO-8601 date, got {text!r}") from None


def parse_accidents(source) -> list[AccidentRecord]:
    """Read accident records from CSV (path, bytes, or open stream)."""
    def build(row):
        return AccidentRecord(
            date=_parse_date(row[0], "date"),
            operator=row[1].strip(),
            category=row[2].strip(),
            fatalities=_parse_int(row[3], "fatalities"),
            serious_injuries=_parse_int(row[4], "serious_injuries"),
        )
    return _parse_rows(source, ACCIDENT_HEADER, build)


def parse_exposures(source) -> list[ExposureRecord]:
    """Read exposure records from CSV (path, bytes, or open stream)."""
    def build(row):
        try:
            volume = float(row[3])
        except ValueError:
            raise ValueError(f"volume must be a number, got {row[3]!r}") from None
        return ExposureRecord(
            operator=row[0].strip(),
            period_start=_parse_date(row[1], "period_start"),
            period_end=_parse_date(row[2], "period_end"),
            volume=volume,
            unit=row[4].strip(),
        )
    return _parse_rows(source, EXPOSURE_HEADER, build)


def emit_accidents_csv(records: list[AccidentRecord]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)
    writer.writerow(ACCIDENT_HEADER)
    for r in records:
        writer.writerow([r.date.isoformat(), r.operator, r.category,
                         r.fatalities, r.serious_injuries])
    return buf.getvalue().encode("utf-8")


def emit_exposures_csv(records: list[ExposureRecord]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)
    writer.writerow(EXPOSURE_HEADER)
    for r in records:
        writer.writerow([r.operator, r.period_start.isoformat(),
                         r.period_end.isoformat(), repr(r.volume), r.unit])
    return buf.getvalue().encode("utf-8")


@dataclass(frozen=True)
class AggregationDetail:
    """An aggregated window plus everything the rounding threw away."""

    window: CountWindow
    basis: str
    raw_total: float
    matched_records: int
    exposure_exact: Fraction
    operator: str
    window_start: datetime.date
    window_end: datetime.date
    category: str | None = None
    fwsi_weight: float | None = None


def _prorated_exposure(
    exposures: list[ExposureRecord],
    operator: str,
    start: datetime.date,
    end: datetime.date,
) -> Fraction:
    mine = [e for e in exposures if e.operator == operator]
    if not mine:
        raise IngestError(f"no exposure records for operator {operator!r}")
    total = Fraction(0)
    covered: list[tuple[int, int]] = []
    w0, w1 = start.toordinal(), end.toordinal()
    for rec in mine:
        r0, r1 = rec.period_start.toordinal(), rec.period_end.toordinal()
        lo, hi = max(r0, w0), min(r1, w1)
        if lo >= hi:
            continue
        total += Fraction(rec.volume) * Fraction(hi - lo, r1 - r0)
        covered.append((lo, hi))
    covered.sort()
    cursor = w0
    for lo, hi in covered:
        if lo > cursor:
            break
        cursor = max(cursor, hi)
    if cursor < w1:
        gap_start = datetime.date.fromordinal(cursor)
        raise IngestError(
            f"exposure gap for operator {operator!r}: window "
            f"{start}..{end} is uncovered from {gap_start}"
        )
    return total


def aggregate_detail(
    records: list[AccidentRecord],
    exposures: list[ExposureRecord],
    window: tuple[datetime.date, datetime.date],
    operator: str,
    category: str | None = None,
    basis: str = "events",
    fwsi_weight: float = 0.1,
) -> AggregationDetail:
    """Aggregate matching records over a half-open date window.

    basis selects what counts as an event: "events" (record count),
    "fatalities" (summed fatalities), or "fwsi" (fatalities plus
    weighted serious injuries, rounded half-up to an integer with the
    unrounded total kept in `raw_total`).
    """
    start, end = window
    if not (isinstance(start, datetime.date) and isinstance(end, datetime.date)):
        raise ValueError("window must be a pair of calendar dates")
    if end <= start:
        raise ValueError(f"window end must follow start, got {start}..{end}")
    if basis not in ("events", "fatalities", "fwsi"):
        raise ValueError(f"basis must be events, fatalities, or fwsi, got {basis!r}")
    if basis == "fwsi" and not (math.isfinite(fwsi_weight) and fwsi_weight >= 0):
        raise ValueError(f"fwsi_weight must be a non-negative number, got {fwsi_weight!r}")

    matched = [
        r for r in records
        if r.operator == operator
        and start <= r.date < end
        and (category is None or r.category == category)
    ]
    if basis == "events":
        raw = float(len(matched))
        events = len(matched)
    elif basis == "fatalities":
        events = sum(r.fatalities for r in matched)
        raw = float(events)
    else:
        raw = float(sum(Fraction(r.fatalities) + Fraction(fwsi_weight) * r.serious_injuries
                        for r in matched))
        events = int(round_half_up(raw))

    exposure_exact = _prorated_exposure(exposures, operator, start, end)
    window_out = CountWindow(events, float(exposure_exact), label=operator)
    return AggregationDetail(
        window=window_out,
        basis=basis,
        raw_total=raw,
        matched_records=len(matched),
        exposure_exact=exposure_exact,
        operator=operator,
        window_start=start,
        window_end=end,
        category=category,
        fwsi_weight=fwsi_weight if basis == "fwsi" else None,
    )


def aggregate(
    records: list[AccidentRecord],
    exposures: list[ExposureRecord],
    window: tuple[datetime.date, datetime.date],
    operator: str,
    category: str | None = None,
    basis: str = "events",
    fwsi_weight: float = 0.1,
) -> CountWindow:
    return aggregate_detail(
        records, exposures, window, operator, category, basis, fwsi_weight
    ).window


def pearson_correlation(xs: list[float], ys: list[float]) -> float:
    """Sample Pearson correlation coefficient of two equally long series."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation undefined for a constant series")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


@dataclass(frozen=True)
class ComparisonResult:
    """One reference-vs-target comparison inside a report bundle."""

    label: str
    method: str
    reference_events: int
    reference_exposure: float
    target_events: int
    target_exposure: float
    statistic_kind: str
    statistic: float
    decision: Decision
    extras: tuple[tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "method": self.method,
            "reference": {"events": self.reference_events,
                          "exposure": self.reference_exposure},
            "target": {"events": self.target_events,
                       "exposure": self.target_exposure},
            "statistic_kind": self.statistic_kind,
            "statistic": self.statistic,
            "decision": {
                "category": self.decision.category.value,
                "marker": self.decision.marker,
                "source": self.decision.source,
            },
            "extras": {k: v for k, v in self.extras},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComparisonResult":
        decision = Decision(
            Category(data["decision"]["category"]),
            data["decision"]["marker"],
            data["decision"]["source"],
        )
        return cls(
            label=data["label"],
            method=data["method"],
            reference_events=data["reference"]["events"],
            reference_exposure=data["reference"]["exposure"],
            target_events=data["target"]["events"],
            target_exposure=data["target"]["exposure"],
            statistic_kind=data["statistic_kind"],
            statistic=data["statistic"],
            decision=decision,
            extras=tuple(data["extras"].items()),
        )


@dataclass(frozen=True)
class ReportBundle:
    comparisons: tuple[ComparisonResult, ...] = ()
    fwsi_weight: float | None = None

    def to_dict(self) -> dict:
        out = {
            "spec_version": 1,
            "comparisons": [c.to_dict() for c in self.comparisons],
        }
        if self.fwsi_weight is not None:
            out["fwsi_weight"] = self.fwsi_weight
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ReportBundle":
        version = data.get("spec_version")
        if version != 1:
            raise ValueError(f"unsupported report version {version!r}")
        return cls(
            comparisons=tuple(ComparisonResult.from_dict(c) for c in data["comparisons"]),
            fwsi_weight=data.get("fwsi_weight"),
        )


def _render_statistic(value: float, marker: str) -> str:
    text = format_fixed(value, 3)
    return f"{marker} {text}" if marker else text


def _render_text(bundle: ReportBundle) -> str:
    lines = ["safety level assessment (schema v1)"]
    if bundle.fwsi_weight is not None:
        lines.append(f"fwsi weight: {bundle.fwsi_weight}")
    if not bundle.comparisons:
        lines.append("no comparisons")
    for c in bundle.comparisons:
        lines.append("")
        lines.append(f"comparison: {c.label}")
        lines.append(f"  method: {c.method}")
        lines.append(
            f"  reference: {c.reference_events} events"
            f" / exposure {c.reference_exposure:g}"
        )
        lines.append(
            f"  target:    {c.target_events} events"
            f" / exposure {c.target_exposure:g}"
        )
        lines.append(
            f"  {c.statistic_kind}: {_render_statistic(c.statistic, c.decision.marker)}"
        )
        lines.append(f"  decision: {c.decision.category.value}")
        for key, value in c.extras:
            lines.append(f"  {key}: {value:g}")
    return "\n".join(lines) + "\n"


_CSV_COLUMNS = [
    "label", "method", "reference_events", "reference_exposure",
    "target_events", "target_exposure", "statistic_kind", "statistic",
    "category", "marker", "source",
]


def _render_csv(bundle: ReportBundle) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)
    writer.writerow(_CSV_COLUMNS)
    for c in bundle.comparisons:
        writer.writerow([
            c.label, c.method, c.reference_events, repr(c.reference_exposure),
            c.target_events, repr(c.target_exposure), c.statistic_kind,
            repr(c.statistic), c.decision.category.value, c.decision.marker,
            c.decision.source,
        ])
    return buf.getvalue()


def emit_report(bundle: ReportBundle, format: str = "text") -> bytes:
    """Serialize a bundle; json round-trips losslessly via load_report."""
    if format == "json":
        # keys keep insertion order so extras round-trip in their original order
        return (json.dumps(bundle.to_dict(), indent=2) + "\n").encode("utf-8")
    if format == "text":
        return _render_text(bundle).encode("utf-8")
    if format == "csv":
        return _render_csv(bundle).encode("utf-8")
    raise ValueError(f"format must be text, json, or csv, got {format!r}")


def load_report(data: bytes | str) -> ReportBundle:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return ReportBundle.from_dict(json.loads(data))
