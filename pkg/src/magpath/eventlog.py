"""Timestamped multi-perspective event logs and per-case pathway summaries.

An event records one step of a case history: a timestamp plus one
categorical value per declared perspective (e.g. intervention,
occupation, unit, optionally diagnosis).  The log groups events by case
and keeps them in a total, deterministic order so that every downstream
stage (graph building, alignment, sampling) is reproducible.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

#: Explicit category used when an optional perspective has no value.
MISSING = "MISSING"

#: Seconds per supported time unit, used when turning timestamp gaps into intervals.
TIME_UNITS = {"days": 86400.0, "hours": 3600.0, "weeks": 604800.0}


class SchemaError(ValueError):
    """A column mapping or perspective schema is inconsistent."""


class ParseError(ValueError):
    """A row could not be parsed under strict error handling."""


@dataclass(frozen=True)
class Event:
    """One timestamped record of a case.

    ``row`` is the position of the record in its source file; it is the
    final tie-break key so that re-parsing the same input always yields
    the same order.
    """

    case_id: str
    timestamp: datetime
    perspectives: Mapping[str, str]
    extras: Mapping[str, str] = field(default_factory=dict)
    row: int = 0

    def sort_key(self, schema: Sequence[str]):
        return (self.timestamp, tuple(self.perspectives[p] for p in schema), self.row)


@dataclass
class ParseReport:
    accepted: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class LengthStats:
    """Per-case pathway length distribution summary.

    ``outlier_threshold`` is ``q3 + 4 * iqr`` and ``outlier_count`` the
    number of cases strictly above it.
    """

    count: int
    median: float
    q1: float
    q3: float
    iqr: float
    outlier_threshold: float
    outlier_count: int


class EventLog:
    """Immutable collection of events grouped by case.

    Within a case, events are ordered by (timestamp, perspective values
    in schema order, source row).  The timestamp alone is not a total
    order because day-resolution data routinely has several events per
    day.
    """

    def __init__(self, schema: Sequence[str], events: Iterable[Event],
                 time_unit: str = "days", parse_report: ParseReport | None = None):
        if time_unit not in TIME_UNITS:
            raise SchemaError(f"unknown time unit {time_unit!r}")
        self.schema: tuple[str, ...] = tuple(schema)
        self.time_unit = time_unit
        self.parse_report = parse_report or ParseReport()
        cases: dict[str, list[Event]] = {}
        for ev in events:
            if not ev.case_id:
                raise SchemaError("event with empty case id")
            missing = [p for p in self.schema if p not in ev.perspectives]
            if missing:
                raise SchemaError(f"event lacks perspective(s) {missing}")
            cases.setdefault(ev.case_id, []).append(ev)
        for evs in cases.values():
            evs.sort(key=lambda e: e.sort_key(self.schema))
        self._cases = cases

    # -- read access -------------------------------------------------

    @property
    def case_ids(self) -> list[str]:
        return sorted(self._cases)

    def events_of(self, case_id: str) -> list[Event]:
        return list(self._cases[case_id])

    def __contains__(self, case_id: str) -> bool:
        return case_id in self._cases

    def iter_events(self) -> Iterator[Event]:
        for cid in self.case_ids:
            yield from self._cases[cid]

    @property
    def n_cases(self) -> int:
        return len(self._cases)

    @property
    def n_events(self) -> int:
        return sum(len(v) for v in self._cases.values())

    def lengths(self) -> dict[str, int]:
        return {cid: len(evs) for cid, evs in self._cases.items()}

    def restrict_to(self, case_ids: Iterable[str]) -> "EventLog":
        keep = set(case_ids)
        unknown = keep - set(self._cases)
        if unknown:
            raise KeyError(f"unknown case id(s): {sorted(unknown)[:5]}")
        events = [ev for cid in sorted(keep) for ev in self._cases[cid]]
        return EventLog(self.schema, events, self.time_unit)

    def replace_events(self, events: Iterable[Event]) -> "EventLog":
        return EventLog(self.schema, events, self.time_unit)

    # -- canonical serialization ------------------------------------

    def to_jsonl(self) -> str:
        """Canonical one-event-per-line serialization.

        Serialize -> parse -> serialize is a fixed point: cases are
        emitted in sorted id order and events in their deterministic
        per-case order.
        """
        header = {"schema": list(self.schema), "time_unit": self.time_unit}
        lines = [json.dumps({"log": header}, sort_keys=True)]
        for cid in self.case_ids:
            for ev in self._cases[cid]:
                rec = {
                    "case": ev.case_id,
                    "t": ev.timestamp.isoformat(),
                    "p": dict(sorted(ev.perspectives.items())),
                    "x": dict(sorted(ev.extras.items())),
                }
                lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EventLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParseError("empty log serialization")
        header = json.loads(lines[0])
        if "log" not in header:
            raise ParseError("first line must carry the log header")
        schema = header["log"]["schema"]
        time_unit = header["log"].get("time_unit", "days")
        events = []
        for i, ln in enumerate(lines[1:]):
            rec = json.loads(ln)
            events.append(Event(
                case_id=rec["case"],
                timestamp=datetime.fromisoformat(rec["t"]),
                perspectives=rec["p"],
                extras=rec.get("x", {}),
                row=i,
            ))
        return cls(schema, events, time_unit)


@dataclass
class ParseConfig:
    """Column mapping and parsing rules for a delimited-text source.

    ``perspective_columns`` maps perspective names (in schema order) to
    source columns; names listed in ``optional`` may be empty and then
    carry the MISSING sentinel.  ``on_malformed`` is ``"error"`` (raise
    with the offending row number) or ``"drop"`` (count and report).
    """

    case_column: str
    time_column: str
    date_format: str = "%Y-%m-%d"
    perspective_columns: dict[str, str] = field(default_factory=dict)
    optional: tuple[str, ...] = ()
    extra_columns: dict[str, str] = field(default_factory=dict)
    delimiter: str = ","
    on_malformed: str = "error"
    time_unit: str = "days"

    @classmethod
    def from_dict(cls, d: Mapping) -> "ParseConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown parse config key(s): {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in d.items()})
        cfg.optional = tuple(cfg.optional)
        return cfg


def parse_event_log(source: str | Path | IO[str], config: ParseConfig) -> EventLog:
    """Parse a delimited text stream into an :class:`EventLog`.

    The header row must contain every mapped column.  Malformed rows
    (bad date, empty case id, empty required perspective) either raise
    or are counted into ``log.parse_report`` depending on
    ``config.on_malformed``; they are never silently lost.
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    reader = csv.DictReader(io.StringIO(text), delimiter=config.delimiter)
    if reader.fieldnames is None:
        raise SchemaError("source has no header row")
    needed = [config.case_column, config.time_column,
              *config.perspective_columns.values(), *config.extra_columns.values()]
    absent = [c for c in needed if c not in reader.fieldnames]
    if absent:
        raise SchemaError(f"mapped column(s) missing from header: {absent}")
    for name in config.optional:
        if name not in config.perspective_columns:
            raise SchemaError(f"optional perspective {name!r} is not mapped")

    schema = list(config.perspective_columns)
    report = ParseReport()
    events = []
    for row_no, row in enumerate(reader, start=2):  # header is line 1
        reason = None
        case_id = (row.get(config.case_column) or "").strip()
        if not case_id:
            reason = "empty case id"
        ts = None
        if reason is None:
            raw_t = (row.get(config.time_column) or "").strip()
            try:
                ts = datetime.strptime(raw_t, config.date_format)
            except ValueError:
                reason = f"unparseable date {raw_t!r}"
        perspectives = {}
        if reason is None:
            for name, col in config.perspective_columns.items():
                value = (row.get(col) or "").strip()
                if not value:
                    if name in config.optional:
                        value = MISSING
                    else:
                        reason = f"empty value for required perspective {name!r}"
                        break
                perspectives[name] = value
        if reason is not None:
            if config.on_malformed == "error":
                raise ParseError(f"row {row_no}: {reason}")
            report.malformed.append((row_no, reason))
            continue
        extras = {name: (row.get(col) or "").strip()
                  for name, col in config.extra_columns.items()}
        events.append(Event(case_id, ts, perspectives, extras, row=row_no))
        report.accepted += 1
    return EventLog(schema, events, config.time_unit, parse_report=report)


def pathway_length_stats(log: EventLog) -> LengthStats:
    """Quartile summary of per-case event counts.

    Quantiles use linear interpolation between order statistics; the
    outlier rule flags cases longer than ``q3 + 4 * iqr``.
    """
    lengths = np.array(sorted(log.lengths().values()), dtype=float)
    if lengths.size == 0:
        raise ValueError("cannot summarize an empty log")
    q1, med, q3 = np.quantile(lengths, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    threshold = q3 + 4.0 * iqr
    return LengthStats(
        count=int(lengths.size),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        iqr=float(iqr),
        outlier_threshold=float(threshold),
        outlier_count=int(np.sum(lengths > threshold)),
    )


def sample_pathways(log: EventLog, max_length: float, n: int, seed: int) -> EventLog:
    """Uniformly sample ``n`` cases whose length is at most ``max_length``.

    Reproducible for a fixed seed regardless of input dict ordering.
    """
    lengths = log.lengths()
    eligible = sorted(cid for cid, ln in lengths.items() if ln <= max_length)
    if n > len(eligible):
        raise ValueError(
            f"requested {n} cases but only {len(eligible)} have length <= {max_length} "
            f"(short by {n - len(eligible)})")
    chosen = random.Random(seed).sample(eligible, n)
    return log.restrict_to(chosen)
