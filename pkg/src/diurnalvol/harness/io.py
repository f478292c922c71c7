"""Tick CSV ingestion, previous-tick gridding and export of simulated days.

Files have the header ``date,timestamp_seconds,price`` (or ``log_price``
in place of ``price``).  Timestamps count seconds from the session open and
the session lasts ``session_seconds``, so a day maps onto [0, 1].
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..preavg import ReturnGrid

log = logging.getLogger(__name__)

SESSION_SECONDS = 23400


@dataclass
class DayTicks:
    date: str
    seconds: np.ndarray
    log_price: np.ndarray
    session_seconds: float = SESSION_SECONDS

    @property
    def times(self) -> np.ndarray:
        """Tick times on [0, 1]."""
        return self.seconds / self.session_seconds


def _parse(value: str, what: str, line: int) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise DataError(f"line {line}: bad {what} {value!r}") from None
    if not math.isfinite(x):
        raise DataError(f"line {line}: non-finite {what}")
    return x


def ingest_ticks(path, session_seconds: float = SESSION_SECONDS) -> list[DayTicks]:
    """Read a tick file into per-day log-price series, in file order."""
    days: dict[str, tuple[list, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:2] != ["date", "timestamp_seconds"] or len(header) != 3 \
                or header[2] not in ("price", "log_price"):
            raise DataError("line 1: header must be date,timestamp_seconds,price|log_price")
        is_log = header[2] == "log_price"
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"line {line}: expected 3 fields, got {len(row)}")
            date = row[0].strip()
            if not date:
                raise DataError(f"line {line}: empty date")
            t = _parse(row[1], "timestamp", line)
            p = _parse(row[2], "price", line)
            if not is_log:
                if p <= 0:
                    raise DataError(f"line {line}: price must be positive")
                p = math.log(p)
            ts, ps = days.setdefault(date, ([], []))
            if ts and t < ts[-1]:
                raise DataError(f"line {line}: timestamp goes backwards within {date}")
            ts.append(t)
            ps.append(p)
    out = []
    for date, (ts, ps) in days.items():
        if not ts:
            log.warning("day %s has no ticks, skipped", date)
            continue
        out.append(DayTicks(date, np.array(ts), np.array(ps), session_seconds))
    return out


def snap_to_grid(ticks: DayTicks, n: int, day=0) -> ReturnGrid:
    """Previous-tick log-prices at i/n, i = 0..n, differenced into n returns.

    Grid points before the first tick take the first tick's price; a warning
    is logged when that happens at the open.
    """
    if n < 1:
        raise DataError("n must be positive")
    if ticks.seconds.size < 2:
        raise DataError(f"day {ticks.date}: need at least two ticks")
    grid = np.arange(n + 1) / n
    idx = np.searchsorted(ticks.times, grid, side="right") - 1
    if idx[0] < 0:
        log.warning("day %s: no tick at or before the open, using the first tick", ticks.date)
    prices = ticks.log_price[np.maximum(idx, 0)]
    return ReturnGrid(np.diff(prices), day)


def write_ticks(path, days, session_seconds: float = SESSION_SECONDS) -> None:
    """Write ``(date, log_prices)`` pairs as equally spaced ticks over the session."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "timestamp_seconds", "log_price"])
        for date, y in days:
            y = np.asarray(y, dtype=float)
            ts = np.arange(y.size) * (session_seconds / (y.size - 1))
            for t, p in zip(ts, y):
                w.writerow([date, repr(float(t)), repr(float(p))])
