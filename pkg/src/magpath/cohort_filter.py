"""Cohort selection and condition-related event filtering.

A cohort is picked by code lists over a date window; its events are
then narrowed to the condition of interest by comparing per-code event
frequencies against a length-matched control sample: a code is
"typical" when it is both frequent enough in the cohort and
over-represented relative to the control (ratio threshold).  Events
with a valid whitelisted diagnosis pass directly; events without a
valid diagnosis pass when their procedure or occupation is typical.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, Sequence

from .eventlog import MISSING, Event, EventLog

#: Syntactic shape of an acceptable diagnosis code (ICD-10-like).
DIAGNOSIS_PATTERN = re.compile(r"[A-Z][0-9]{2}[0-9A-Z]?")

#: Placeholder values that never count as a real diagnosis.
DEFAULT_INVALID_CODES = frozenset({MISSING, "", "NONE", "0000"})


def is_valid_diagnosis(code: str,
                       invalid: frozenset[str] = DEFAULT_INVALID_CODES) -> bool:
    return code not in invalid and DIAGNOSIS_PATTERN.fullmatch(code) is not None


@dataclass
class FilterThresholds:
    """Ratio and frequency bounds for typical procedures (``_p``) and
    occupations (``_o``); ``max_*`` may be infinite."""

    theta_p: float = 6.0
    min_p: float = 10.0
    max_p: float = math.inf
    theta_o: float = 10.0
    min_o: float = 50.0
    max_o: float = math.inf

    def __post_init__(self):
        for theta in (self.theta_p, self.theta_o):
            if not (theta >= 0 and not math.isinf(theta)):
                raise ValueError("ratio thresholds must be finite and nonnegative")
        for lo, hi, tag in ((self.min_p, self.max_p, "procedure"),
                            (self.min_o, self.max_o, "occupation")):
            if lo > hi:
                raise ValueError(f"{tag} frequency bounds out of order: {lo} > {hi}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "FilterThresholds":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown threshold key(s): {sorted(unknown)}")
        clean = {k: (math.inf if v in (None, "inf") else float(v)) for k, v in d.items()}
        return cls(**clean)


class FrequencyTable:
    """Event counts of one perspective's values in cohort vs control."""

    def __init__(self, perspective: str, cohort: Mapping[str, int],
                 control: Mapping[str, int]):
        self.perspective = perspective
        self.cohort = dict(cohort)
        self.control = dict(control)
        if any(c < 0 for c in self.cohort.values()) or \
           any(c < 0 for c in self.control.values()):
            raise ValueError("negative count")

    @classmethod
    def from_logs(cls, cohort: EventLog, control: EventLog,
                  perspective: str) -> "FrequencyTable":
        def count(log):
            acc: dict[str, int] = {}
            for ev in log.iter_events():
                value = ev.perspectives[perspective]
                acc[value] = acc.get(value, 0) + 1
            return acc

        if perspective not in cohort.schema or perspective not in control.schema:
            raise ValueError(f"perspective {perspective!r} missing from a log schema")
        return cls(perspective, count(cohort), count(control))

    def codes(self) -> list[str]:
        return sorted(set(self.cohort) | set(self.control))

    def ratio(self, code: str) -> float:
        """Cohort/control occurrence ratio; +inf when the code never
        occurs in the control but does in the cohort."""
        numer = self.cohort.get(code, 0)
        denom = self.control.get(code, 0)
        if denom == 0:
            return math.inf if numer > 0 else 0.0
        return numer / denom

    def to_json(self) -> str:
        rows = [{"code": c, "cohort": self.cohort.get(c, 0),
                 "control": self.control.get(c, 0),
                 "ratio": (None if math.isinf(self.ratio(c)) else self.ratio(c))}
                for c in self.codes()]
        return json.dumps({"perspective": self.perspective, "rows": rows}, indent=2)


# -- cohort selection ------------------------------------------------


def select_cohort(log: EventLog, code_lists: Mapping[str, Iterable[str]],
                  window: tuple[datetime, datetime]) -> set[str]:
    """Cases with at least one in-window event carrying a listed code.

    ``code_lists`` maps perspective name -> code collection; the window
    is inclusive on both ends.
    """
    start, end = window
    if start > end:
        raise ValueError(f"empty window: {start} > {end}")
    if not code_lists:
        raise ValueError("no code lists given")
    sets = {}
    for perspective, codes in code_lists.items():
        if perspective not in log.schema:
            raise ValueError(f"perspective {perspective!r} not in log schema")
        codes = set(codes)
        if not codes:
            raise ValueError(f"empty code list for {perspective!r}")
        sets[perspective] = codes
    selected = set()
    for ev in log.iter_events():
        if ev.case_id in selected or not start <= ev.timestamp <= end:
            continue
        for perspective, codes in sets.items():
            if ev.perspectives[perspective] in codes:
                selected.add(ev.case_id)
                break
    return selected


@dataclass
class MatchedSample:
    log: EventLog
    skipped: list[tuple[str, int]] = field(default_factory=list)


def matched_control_sample(cohort: EventLog, pool: EventLog, seed: int) -> MatchedSample:
    """Sample control cases whose pathway-length multiset matches the
    cohort's.

    For every cohort length the same number of pool cases of that exact
    length is drawn (uniformly, reproducibly by ``seed``).  Cohort
    cases whose length cannot be covered by the pool are skipped and
    reported, not silently dropped.
    """
    cohort_ids = set(cohort.case_ids)
    by_length: dict[int, list[str]] = {}
    for cid, length in pool.lengths().items():
        if cid not in cohort_ids:
            by_length.setdefault(length, []).append(cid)
    for ids in by_length.values():
        ids.sort()
    need: dict[int, list[str]] = {}
    for cid in cohort.case_ids:
        need.setdefault(len(cohort.events_of(cid)), []).append(cid)

    rng = random.Random(seed)
    chosen: list[str] = []
    skipped: list[tuple[str, int]] = []
    for length in sorted(need):
        wanted = need[length]
        available = by_length.get(length, [])
        take = min(len(wanted), len(available))
        chosen.extend(rng.sample(available, take))
        for cid in wanted[take:]:
            skipped.append((cid, length))
    return MatchedSample(pool.restrict_to(chosen), skipped)


# -- typical-code selection ------------------------------------------


def select_typical_codes(table: FrequencyTable, theta: float, min_f: float,
                         max_f: float = math.inf) -> set[str]:
    """Codes over-represented in the cohort (ratio >= theta) with
    cohort occurrence count inside [min_f, max_f]."""
    out = set()
    for code in table.codes():
        freq = table.cohort.get(code, 0)
        if table.ratio(code) >= theta and min_f <= freq <= max_f:
            out.add(code)
    return out


# -- event filtering -------------------------------------------------


@dataclass
class FilterResult:
    log: EventLog
    emptied_cases: list[str] = field(default_factory=list)
    kept_by_diagnosis: int = 0
    kept_by_typical: int = 0


def filter_events(log: EventLog, diagnosis_whitelist: Iterable[str],
                  typical_procedures: Iterable[str],
                  typical_occupations: Iterable[str],
                  diagnosis_perspective: str = "diagnosis",
                  procedure_perspective: str = "intervention",
                  occupation_perspective: str = "occupation",
                  invalid_codes: frozenset[str] = DEFAULT_INVALID_CODES,
                  ) -> FilterResult:
    """Keep condition-related events, preserving within-case order.

    An event passes either through the diagnosis branch (syntactically
    valid code matching the whitelist exactly or on its 3-character
    disease prefix) or -- when it has no valid diagnosis -- through the
    typical-procedure/occupation branch.  Cases losing all their events
    are reported.
    """
    whitelist = set(diagnosis_whitelist)
    procedures = set(typical_procedures)
    occupations = set(typical_occupations)
    has_diagnosis = diagnosis_perspective in log.schema

    def whitelisted(code: str) -> bool:
        return code in whitelist or code[:3] in whitelist

    kept: list[Event] = []
    kept_diag = kept_typ = 0
    for ev in log.iter_events():
        code = ev.perspectives.get(diagnosis_perspective, MISSING) if has_diagnosis \
            else MISSING
        if is_valid_diagnosis(code, invalid_codes):
            if whitelisted(code):
                kept.append(ev)
                kept_diag += 1
            continue
        if ev.perspectives[procedure_perspective] in procedures or \
                ev.perspectives[occupation_perspective] in occupations:
            kept.append(ev)
            kept_typ += 1
    out = log.replace_events(kept)
    emptied = sorted(set(log.case_ids) - set(out.case_ids))
    return FilterResult(out, emptied, kept_diag, kept_typ)


# -- interactive preview ---------------------------------------------


@dataclass
class PreviewReport:
    typical_procedures: list[str]
    typical_occupations: list[str]
    passing_events: int | None
    sample: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "typical_procedures": self.typical_procedures,
            "typical_occupations": self.typical_occupations,
            "passing_events": self.passing_events,
            "sample": self.sample,
        }, indent=2)


def preview_filter(thresholds: FilterThresholds, procedures: FrequencyTable,
                   occupations: FrequencyTable, log: EventLog | None = None,
                   sample_size: int = 10) -> PreviewReport:
    """What a threshold setting would select, for interactive tuning.

    Computing how many events would pass requires the event stream
    itself, so the count and sample are only present when ``log`` is
    given (frequency tables alone cannot tell which events co-occur).
    """
    typ_p = sorted(select_typical_codes(procedures, thresholds.theta_p,
                                        thresholds.min_p, thresholds.max_p))
    typ_o = sorted(select_typical_codes(occupations, thresholds.theta_o,
                                        thresholds.min_o, thresholds.max_o))
    passing = None
    sample: list[dict] = []
    if log is not None:
        p_set, o_set = set(typ_p), set(typ_o)
        passing = 0
        for ev in log.iter_events():
            if ev.perspectives[procedures.perspective] in p_set or \
                    ev.perspectives[occupations.perspective] in o_set:
                passing += 1
                if len(sample) < sample_size:
                    sample.append({
                        "case": ev.case_id,
                        "timestamp": ev.timestamp.isoformat(),
                        procedures.perspective: ev.perspectives[procedures.perspective],
                        occupations.perspective: ev.perspectives[occupations.perspective],
                    })
    return PreviewReport(typ_p, typ_o, passing, sample)


# -- two-stream merge ------------------------------------------------


def merge_diagnoses(procedures: EventLog, diagnoses: EventLog,
                    diagnosis_perspective: str = "diagnosis",
                    join_on: Sequence[str] = ("unit", "occupation"),
                    ) -> EventLog:
    """Attach diagnosis codes to procedure events by a 1:1 contact join.

    Events are grouped by (case, date, *join_on*); a group with exactly
    one diagnosis event copies its code onto every procedure event of
    the group, anything else (zero or ambiguous) yields the MISSING
    sentinel.  The result carries the procedure schema plus the
    diagnosis perspective.
    """
    if diagnosis_perspective not in diagnoses.schema:
        raise ValueError(f"{diagnosis_perspective!r} not in diagnosis log schema")
    groups: dict[tuple, list[str]] = {}
    for ev in diagnoses.iter_events():
        key = (ev.case_id, ev.timestamp.date(),
               *(ev.perspectives.get(k, MISSING) for k in join_on))
        groups.setdefault(key, []).append(ev.perspectives[diagnosis_perspective])

    merged = []
    for ev in procedures.iter_events():
        key = (ev.case_id, ev.timestamp.date(),
               *(ev.perspectives.get(k, MISSING) for k in join_on))
        codes = groups.get(key, [])
        code = codes[0] if len(codes) == 1 else MISSING
        merged.append(Event(ev.case_id, ev.timestamp,
                            {**ev.perspectives, diagnosis_perspective: code},
                            ev.extras, ev.row))
    return EventLog((*procedures.schema, diagnosis_perspective), merged,
                    procedures.time_unit)
