"""Synthetic data in the GEFCom2014 solar-track CSV layout.

Used by the tests and for smoke runs when the real competition files are not
at hand. Irradiance follows a crude clear-sky curve attenuated by an AR(1)
cloud-cover process; the four radiation/precipitation fields are written as
accumulations since 00 UTC like the real files, and power is a noisy, clipped
function of hourly irradiance and cloud cover.
"""

from __future__ import annotations

import argparse
import csv
import math
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .ingest import ACCUMULATED, DEFAULT_COLUMNS, HOUR, format_timestamp

LATITUDE = math.radians(-35.0)  # southern-hemisphere site: summer around January


def _clear_sky(ts: datetime) -> float:
    """Top-of-canopy irradiance proxy in [0, 1] for the hour ending at ``ts``."""
    mid = ts - timedelta(minutes=30)
    doy = mid.timetuple().tm_yday
    decl = math.radians(23.45) * math.sin(2 * math.pi * (284 + doy) / 365.0)
    # the site's solar noon falls near 02 UTC, as for the GEFCom zones
    hour_angle = math.radians(15.0 * (mid.hour + mid.minute / 60.0 - 2.0))
    cos_z = math.sin(LATITUDE) * math.sin(decl) + math.cos(LATITUDE) * math.cos(decl) * math.cos(hour_angle)
    return max(cos_z, 0.0)


def generate(start: datetime, end: datetime, zones=(1,), seed: int = 0) -> list[list]:
    """Rows ``[zone, timestamp, VAR78..VAR228, power]`` for every hour in ``(start, end]``."""
    rng = np.random.default_rng(seed)
    names = list(DEFAULT_COLUMNS.values())
    rows = []
    for zone in zones:
        cloud = 0.4
        totals = dict.fromkeys(ACCUMULATED, 0.0)
        ts = start + HOUR
        while ts <= end:
            cloud = float(np.clip(0.9 * cloud + 0.1 * 0.4 + 0.12 * rng.standard_normal(), 0.0, 1.0))
            cs = _clear_sky(ts)
            hourly = {
                "SSRD": 3.6e6 * cs * (1.0 - 0.75 * cloud),
                "STRD": 1.1e6 + 3e5 * cloud + 2e4 * rng.standard_normal(),
                "TSR": 3.4e6 * cs * (1.0 - 0.7 * cloud),
                "TP": max(0.0, 1e-4 * (cloud - 0.6)) * rng.random(),
            }
            if ts.hour == 1:  # a new forecast run starts accumulating
                totals = dict.fromkeys(ACCUMULATED, 0.0)
            for f in ACCUMULATED:
                totals[f] += hourly[f]
            inst = {
                "TCLW": 0.1 * cloud * rng.random(),
                "TCIW": 0.05 * cloud * rng.random(),
                "SP": 94000.0 + 500.0 * rng.standard_normal(),
                "R": float(np.clip(50 + 40 * cloud + 5 * rng.standard_normal(), 0, 100)),
                "TCC": cloud,
                "U10": 3.0 * rng.standard_normal(),
                "V10": 3.0 * rng.standard_normal(),
                "T2": 290.0 + 8.0 * cs + 2.0 * rng.standard_normal(),
            }
            values = {**inst, **totals}
            power = float(np.clip(0.85 * cs * (1.0 - 0.8 * cloud) + 0.02 * rng.standard_normal(), 0.0, 1.0))
            if cs == 0.0:
                power = 0.0
            rows.append([zone, format_timestamp(ts), *(values[n] for n in names), power])
            ts += HOUR
    return rows


def write_csv(path, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ZONEID", "TIMESTAMP", *DEFAULT_COLUMNS, "POWER"])
        for r in rows:
            w.writerow([r[0], r[1], *(repr(float(v)) for v in r[2:])])
    return path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m pvstack.synthetic", description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="CSV file to write")
    ap.add_argument("--start", default="2012-12-31T00:00", help="first row is one hour after this")
    ap.add_argument("--end", default="2014-03-01T00:00", help="last row timestamp")
    ap.add_argument("--zones", default="1", help="comma-separated zone ids")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    zones = [int(z) for z in args.zones.split(",")]
    rows = generate(datetime.fromisoformat(args.start), datetime.fromisoformat(args.end), zones, args.seed)
    write_csv(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
