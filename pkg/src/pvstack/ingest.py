"""GEFCom2014-style CSV ingestion, alignment and chronological splitting.

Weather files carry one row per (zone, hour) with the twelve ECMWF forecast
variables; power files carry capacity-normalized plant output. Gaps are a hard
error: the kNN distance space is silently corrupted by imputation.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import Dataset
from .errors import (
    EmptyDataset,
    EmptyIntersection,
    GapInSeries,
    InvalidSplit,
    MalformedRow,
    OutOfRangePower,
    RangeNotCovered,
    UnknownZone,
    ZoneMismatch,
)

logger = logging.getLogger(__name__)

# Canonical variable names, in file column order.
VARIABLES: tuple[str, ...] = (
    "TCLW", "TCIW", "SP", "R", "TCC", "U10", "V10", "T2", "SSRD", "STRD", "TSR", "TP",
)

# GEFCom column code -> canonical name (ECMWF parameter ids).
DEFAULT_COLUMNS: dict[str, str] = {
    "VAR78": "TCLW",
    "VAR79": "TCIW",
    "VAR134": "SP",
    "VAR157": "R",
    "VAR164": "TCC",
    "VAR165": "U10",
    "VAR166": "V10",
    "VAR167": "T2",
    "VAR169": "SSRD",
    "VAR175": "STRD",
    "VAR178": "TSR",
    "VAR228": "TP",
}

# Fields published as accumulations since the start of each forecast run.
ACCUMULATED: tuple[str, ...] = ("SSRD", "STRD", "TSR", "TP")

ZONE_COLUMN = "ZONEID"
TIME_COLUMN = "TIMESTAMP"
POWER_COLUMN = "POWER"

HOUR = timedelta(hours=1)


@dataclass(frozen=True)
class WeatherRecord:
    zone_id: int
    timestamp: datetime
    vars: Mapping[str, float] = field(hash=False)

    def __post_init__(self):
        if set(self.vars) != set(VARIABLES) or len(self.vars) != len(VARIABLES):
            raise MalformedRow(f"expected the 12 variables {VARIABLES}, got {sorted(self.vars)}")
        ordered = {}
        for name in VARIABLES:
            v = float(self.vars[name])
            if not math.isfinite(v):
                raise MalformedRow(f"{name} is not finite at {self.timestamp}")
            ordered[name] = v
        object.__setattr__(self, "vars", ordered)
        _check_on_hour(self.timestamp)

    def values(self, names: Sequence[str] = VARIABLES) -> list[float]:
        return [self.vars[n] for n in names]


@dataclass(frozen=True)
class PowerRecord:
    zone_id: int
    timestamp: datetime
    power: float

    def __post_init__(self):
        p = float(self.power)
        if not math.isfinite(p):
            raise MalformedRow(f"power is not finite at {self.timestamp}")
        if not 0.0 <= p <= 1.0:
            raise OutOfRangePower(f"power {p} outside [0, 1] at {self.timestamp}")
        object.__setattr__(self, "power", p)
        _check_on_hour(self.timestamp)


@dataclass(frozen=True)
class SplitSpec:
    """Half-open train and validation ranges followed by whole test days."""

    train_range: tuple[datetime, datetime]
    validation_range: tuple[datetime, datetime]
    test_days: tuple[date, ...] = ()

    def __post_init__(self):
        days = tuple(sorted(set(_as_date(d) for d in self.test_days)))
        if len(days) != len(tuple(self.test_days)):
            raise InvalidSplit("duplicate test days")
        object.__setattr__(self, "test_days", days)
        (t0, t1), (v0, v1) = self.train_range, self.validation_range
        if not t0 < t1:
            raise InvalidSplit(f"empty train range {t0} .. {t1}")
        if not v0 < v1:
            raise InvalidSplit(f"empty validation range {v0} .. {v1}")
        if v0 < t1:
            raise InvalidSplit("validation range must start at or after the end of the train range")
        if days and datetime.combine(days[0], datetime.min.time()) < v1:
            raise InvalidSplit("test days must lie after the validation range")

    @classmethod
    def chronological(
        cls,
        start: datetime,
        end: datetime,
        validation_fraction: float,
        test_days: Iterable[date] = (),
    ) -> "SplitSpec":
        """Split ``[start, end)`` at the hour leaving ``validation_fraction`` for validation."""
        if not 0.0 < validation_fraction < 1.0:
            raise InvalidSplit(f"validation_fraction must be in (0, 1), got {validation_fraction}")
        hours = int((end - start) / HOUR)
        n_train = int(round(hours * (1.0 - validation_fraction)))
        cut = start + n_train * HOUR
        return cls((start, cut), (cut, end), tuple(test_days))

    @classmethod
    def default(cls) -> "SplitSpec":
        """Train/validate on 2013 (80/20), test on 20-26 Feb 2014."""
        return cls.chronological(
            datetime(2013, 1, 1),
            datetime(2014, 1, 1),
            0.2,
            [date(2014, 2, d) for d in range(20, 27)],
        )


def parse_timestamp(text: str) -> datetime:
    """Accepts ``YYYYMMDD HH:MM`` (GEFCom) and ISO-8601 ``YYYY-MM-DDTHH:MM``."""
    text = text.strip()
    try:
        return datetime.strptime(text, "%Y%m%d %H:%M")
    except ValueError:
        pass
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise MalformedRow(f"unparseable timestamp {text!r}") from None
    if ts.tzinfo is not None:
        raise MalformedRow(f"timezone-aware timestamp {text!r} not supported")
    return ts


def format_timestamp(ts: datetime) -> str:
    return ts.strftime("%Y%m%d %H:%M")


def _check_on_hour(ts: datetime) -> None:
    if ts.minute or ts.second or ts.microsecond:
        raise MalformedRow(f"timestamp {ts} is not on an hour boundary")


def _as_date(d) -> date:
    if isinstance(d, datetime):
        return d.date()
    if isinstance(d, date):
        return d
    return date.fromisoformat(str(d))


def _read_rows(path, required: Sequence[str]):
    """Yield (line_number, row dict) with the header validated."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        missing = [c for c in required if c not in header]
        if missing:
            raise MalformedRow(f"{path}: header lacks column(s) {missing}")
        for row in reader:
            yield reader.line_num, row


def _parse_float(text, path, line, column) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise MalformedRow(f"{path}:{line}: non-numeric {column} value {text!r}") from None
    if not math.isfinite(v):
        raise MalformedRow(f"{path}:{line}: non-finite {column} value {text!r}")
    return v


def _parse_zone(text, path, line) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise MalformedRow(f"{path}:{line}: non-integer zone {text!r}") from None


def _finish(records: list, path, zone: int, zones_seen: set):
    if not records:
        if zones_seen:
            raise UnknownZone(f"{path}: zone {zone} not present (zones: {sorted(zones_seen)})")
        return records
    records.sort(key=lambda r: r.timestamp)
    for prev, cur in zip(records, records[1:]):
        step = cur.timestamp - prev.timestamp
        if step == timedelta(0):
            raise MalformedRow(f"{path}: duplicate timestamp {cur.timestamp} for zone {zone}")
        if step != HOUR:
            raise GapInSeries(f"{path}: zone {zone} jumps from {prev.timestamp} to {cur.timestamp}")
    return records


def load_weather(path, zone: int, columns: Mapping[str, str] | None = None) -> list[WeatherRecord]:
    """Read one zone's hourly weather rows, sorted by timestamp.

    ``columns`` maps file column names to canonical variable names and
    defaults to :data:`DEFAULT_COLUMNS`.
    """
    columns = dict(DEFAULT_COLUMNS if columns is None else columns)
    if sorted(columns.values()) != sorted(VARIABLES):
        raise MalformedRow(f"column map must cover exactly the variables {VARIABLES}")
    records: list[WeatherRecord] = []
    zones_seen: set[int] = set()
    for line, row in _read_rows(path, [ZONE_COLUMN, TIME_COLUMN, *columns]):
        z = _parse_zone(row[ZONE_COLUMN], path, line)
        zones_seen.add(z)
        if z != zone:
            continue
        try:
            ts = parse_timestamp(row[TIME_COLUMN] or "")
            values = {name: _parse_float(row[col], path, line, col) for col, name in columns.items()}
            records.append(WeatherRecord(z, ts, values))
        except MalformedRow as exc:
            raise MalformedRow(f"{path}:{line}: {exc}") from None
    out = _finish(records, path, zone, zones_seen)
    logger.debug("loaded %d weather rows for zone %d from %s", len(out), zone, path)
    return out


def load_power(path, zone: int) -> list[PowerRecord]:
    records: list[PowerRecord] = []
    zones_seen: set[int] = set()
    for line, row in _read_rows(path, [ZONE_COLUMN, TIME_COLUMN, POWER_COLUMN]):
        z = _parse_zone(row[ZONE_COLUMN], path, line)
        zones_seen.add(z)
        if z != zone:
            continue
        ts = parse_timestamp(row[TIME_COLUMN] or "")
        p = _parse_float(row[POWER_COLUMN], path, line, POWER_COLUMN)
        if not 0.0 <= p <= 1.0:
            raise OutOfRangePower(f"{path}:{line}: power {p} outside [0, 1]")
        records.append(PowerRecord(z, ts, p))
    return _finish(records, path, zone, zones_seen)


def write_weather(records: Sequence[WeatherRecord], path, columns: Mapping[str, str] | None = None) -> None:
    """Inverse of :func:`load_weather`; floats are written with ``repr`` so they round-trip exactly."""
    columns = dict(DEFAULT_COLUMNS if columns is None else columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([ZONE_COLUMN, TIME_COLUMN, *columns])
        for r in records:
            w.writerow([r.zone_id, format_timestamp(r.timestamp), *(repr(r.vars[n]) for n in columns.values())])


def write_power(records: Sequence[PowerRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([ZONE_COLUMN, TIME_COLUMN, POWER_COLUMN])
        for r in records:
            w.writerow([r.zone_id, format_timestamp(r.timestamp), repr(r.power)])


def deaccumulate(
    records: Sequence[WeatherRecord],
    fields: Sequence[str] = ACCUMULATED,
    run_start_hour: int = 1,
) -> list[WeatherRecord]:
    """Turn run-cumulative fields into hourly increments.

    GEFCom forecast runs start at 00 UTC and their first published hour is
    01:00, whose value is already a one-hour accumulation and is kept as-is.
    """
    out: list[WeatherRecord] = []
    prev = None
    for r in records:
        vals = dict(r.vars)
        contiguous = prev is not None and r.timestamp - prev.timestamp == HOUR
        if contiguous and r.timestamp.hour != run_start_hour:
            for f in fields:
                vals[f] = r.vars[f] - prev.vars[f]
        out.append(WeatherRecord(r.zone_id, r.timestamp, vals))
        prev = r
    return out


def align(weather: Sequence[WeatherRecord], power: Sequence[PowerRecord]) -> Dataset:
    """Inner join on timestamp; all twelve variables become feature columns."""
    if not weather or not power:
        raise EmptyDataset("align needs non-empty weather and power series")
    zones = {r.zone_id for r in weather} | {r.zone_id for r in power}
    if len(zones) != 1:
        raise ZoneMismatch(f"weather and power cover different zones: {sorted(zones)}")
    by_time = {r.timestamp: r for r in weather}
    joined = sorted(
        ((p.timestamp, by_time[p.timestamp], p.power) for p in power if p.timestamp in by_time),
        key=lambda t: t[0],
    )
    if not joined:
        raise EmptyIntersection("weather and power share no timestamps")
    X = np.array([w.values() for _, w, _ in joined], dtype=float)
    y = np.array([p for _, _, p in joined], dtype=float)
    ts = np.array([np.datetime64(t, "s") for t, _, _ in joined])
    return Dataset(X, y, ts, VARIABLES, meta={"zone": zones.pop()})


def _hours_in(ts: np.ndarray, start: datetime, end: datetime) -> np.ndarray:
    return (ts >= np.datetime64(start, "s")) & (ts < np.datetime64(end, "s"))


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Partition rows into (train, validation, test).

    Every hour of the train and validation ranges and of each test day must
    be present; rows outside all three are dropped.
    """
    ts = dataset.timestamps
    masks = []
    for label, (start, end) in (("train", spec.train_range), ("validation", spec.validation_range)):
        m = _hours_in(ts, start, end)
        expected = int((end - start) / HOUR)
        if int(m.sum()) != expected:
            raise RangeNotCovered(f"{label} range {start} .. {end} has {int(m.sum())} of {expected} hours")
        masks.append(m)
    test = np.zeros(len(ts), dtype=bool)
    for d in spec.test_days:
        start = datetime.combine(d, datetime.min.time())
        m = _hours_in(ts, start, start + timedelta(days=1))
        if int(m.sum()) != 24:
            raise RangeNotCovered(f"test day {d} has {int(m.sum())} of 24 hours")
        test |= m
    masks.append(test)
    return tuple(dataset.take(m) for m in masks)
