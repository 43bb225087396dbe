"""Shared synthetic-data helpers for the test suite."""

import random
from datetime import datetime, timedelta

from magpath.eventlog import Event, EventLog
from magpath.mag import Mag, build_mag

SCHEMA = ("intervention", "occupation", "unit")

INTERVENTIONS = ["AV001", "BT002", "US003", "MW004", "DL005", "PC006"]
OCCUPATIONS = ["gp", "nurse", "midwife", "obstetrician"]
UNITS = ["clinic", "lab", "ward"]


def random_log(rng: random.Random, n_cases: int = 8, max_len: int = 6) -> EventLog:
    """A small random event log with day-resolution timestamps."""
    events = []
    row = 0
    for c in range(n_cases):
        t = datetime(2014, 1, 1) + timedelta(days=rng.randrange(0, 30))
        for _ in range(rng.randint(1, max_len)):
            events.append(Event(
                f"p{c:02d}", t,
                {"intervention": rng.choice(INTERVENTIONS),
                 "occupation": rng.choice(OCCUPATIONS),
                 "unit": rng.choice(UNITS)},
                row=row))
            row += 1
            t += timedelta(days=rng.randrange(0, 10))
    return EventLog(SCHEMA, events)


def random_mag(rng: random.Random, n_cases: int = 8, max_len: int = 6,
               endpoints: bool = True) -> Mag:
    return build_mag(random_log(rng, n_cases, max_len), list(SCHEMA),
                     add_virtual_endpoints=endpoints)


# -- planted frequency structure for the filtering tests -------------
#
# Every decoy code violates exactly one of the selection constraints,
# so the default thresholds (ratio 6 / freq 10 for procedures, ratio
# 10 / freq 50 for occupations) pick out exactly the two RARE codes,
# and loosening any single threshold admits a known decoy.

PLANTED_PROC_COHORT = {"P_RARE6": 12, "P_LOWFREQ": 6, "P_LOWRATIO": 50,
                       "P_COMMON": 100, "P_NOVEL": 3, "P_FILL": 199}
PLANTED_PROC_CONTROL = {"P_RARE6": 2, "P_LOWFREQ": 1, "P_LOWRATIO": 10,
                        "P_COMMON": 100, "P_CONTROLONLY": 8, "P_FILL": 87}
PLANTED_OCC_COHORT = {"O_RARE10": 60, "O_LOWFREQ": 20, "O_LOWRATIO": 90,
                      "O_COMMON": 200}
PLANTED_OCC_CONTROL = {"O_RARE10": 6, "O_LOWFREQ": 2, "O_LOWRATIO": 10,
                       "O_COMMON": 190}

PLANTED_EXPECTED = {"procedures": {"P_RARE6"}, "occupations": {"O_RARE10"}}


def _code_stream(counts, rng):
    out = []
    for code in sorted(counts):
        out.extend([code] * counts[code])
    rng.shuffle(out)
    return out


def _counted_log(proc_counts, occ_counts, prefix, n_cases, rng):
    procs = _code_stream(proc_counts, rng)
    occs = _code_stream(occ_counts, rng)
    assert len(procs) == len(occs), "perspective totals must agree"
    events = []
    for i, (p, o) in enumerate(zip(procs, occs)):
        events.append(Event(
            f"{prefix}{i % n_cases:02d}",
            datetime(2014, 1, 1) + timedelta(days=i // n_cases),
            {"intervention": p, "occupation": o, "unit": "ward"},
            row=i))
    return EventLog(SCHEMA, events)


def planted_cohort_pair(seed: int = 11, n_cases: int = 25):
    """(cohort_log, control_log) realizing the planted count tables."""
    rng = random.Random(seed)
    cohort = _counted_log(PLANTED_PROC_COHORT, PLANTED_OCC_COHORT,
                          "p", n_cases, rng)
    control = _counted_log(PLANTED_PROC_CONTROL, PLANTED_OCC_CONTROL,
                           "q", n_cases, rng)
    return cohort, control
