"""Capacity-normalized mean absolute error, per calendar day and per week."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .errors import IncompleteDay, LengthMismatch, ZeroCapacity

HOURS_PER_DAY = 24


def nmae(pred, actual, capacity: float = 1.0) -> float:
    """100 * mean(|pred - actual|) / capacity, in percent."""
    pred = np.asarray(pred, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if pred.shape != actual.shape:
        raise LengthMismatch(f"{pred.shape[0]} predictions for {actual.shape[0]} actuals")
    if pred.shape[0] == 0:
        raise LengthMismatch("nMAE of an empty series")
    if not capacity > 0:
        raise ZeroCapacity(f"capacity must be > 0, got {capacity}")
    return float(100.0 * np.mean(np.abs(pred - actual)) / capacity)


@dataclass(frozen=True)
class ErrorReport:
    models: tuple[str, ...]
    days: tuple[date, ...]
    daily: dict  # model -> tuple of daily nMAE (%)
    weekly: dict  # model -> mean of the daily values

    def rows(self) -> list[tuple[str, list[float]]]:
        out = [(d.isoformat(), [self.daily[m][i] for m in self.models]) for i, d in enumerate(self.days)]
        out.append(("weekly", [self.weekly[m] for m in self.models]))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["day", *self.models])
        for label, values in self.rows():
            writer.writerow([label, *(f"{v:.4f}" for v in values)])
        return buf.getvalue()

    def to_text(self) -> str:
        """Fixed-width table: one row per day, then the weekly row."""
        label_w = max(len("Weekly Error (%)"), 10)
        col_w = max(8, *(len(m) + 2 for m in self.models))
        lines = ["nMAE (%)".ljust(label_w) + "".join(m.upper().rjust(col_w) for m in self.models)]
        lines.append("-" * len(lines[0]))
        for label, values in self.rows():
            if label == "weekly":
                lines.append("-" * len(lines[0]))
                label = "Weekly Error (%)"
            lines.append(label.ljust(label_w) + "".join(f"{v:.2f}".rjust(col_w) for v in values))
        return "\n".join(lines) + "\n"


def daily_weekly_report(
    preds: Mapping[str, Sequence[float]],
    actual,
    timestamps,
    capacity: float = 1.0,
    days: Sequence[date] | None = None,
) -> ErrorReport:
    """Daily nMAE over each calendar day's 24 hourly rows; weekly is their mean.

    ``days``, when given, must be exactly the days the timestamps cover.
    """
    actual = np.asarray(actual, dtype=float).reshape(-1)
    ts = np.asarray(timestamps, dtype="datetime64[s]").reshape(-1)
    if ts.shape[0] != actual.shape[0]:
        raise LengthMismatch(f"{ts.shape[0]} timestamps for {actual.shape[0]} actuals")
    if not capacity > 0:
        raise ZeroCapacity(f"capacity must be > 0, got {capacity}")
    day_of = ts.astype("datetime64[D]")
    covered = sorted(set(day_of.tolist()))
    if days is not None and sorted(days) != covered:
        raise IncompleteDay(f"timestamps cover {covered}, expected {sorted(days)}")
    if not covered:
        raise IncompleteDay("no rows to report on")
    masks = []
    for d in covered:
        m = day_of == np.datetime64(d, "D")
        hours = set(((ts[m] - np.datetime64(d, "D")) // np.timedelta64(1, "h")).tolist())
        if int(m.sum()) != HOURS_PER_DAY or len(hours) != HOURS_PER_DAY:
            raise IncompleteDay(f"{d} has {int(m.sum())} rows covering {len(hours)} distinct hours, need 24")
        masks.append(m)
    daily, weekly = {}, {}
    for name, p in preds.items():
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape != actual.shape:
            raise LengthMismatch(f"model {name!r}: {p.shape[0]} predictions for {actual.shape[0]} actuals")
        values = tuple(nmae(p[m], actual[m], capacity) for m in masks)
        daily[name] = values
        weekly[name] = float(np.mean(values))
    return ErrorReport(tuple(preds), tuple(covered), daily, weekly)
