"""Loaders for end-of-day and intraday price files.

End-of-day files carry (date, id, close); intraday files carry
(date, id, bar_or_time, last_price) where ``bar_or_time`` is either a bar
index 1..237 or a time of day mapped through the grid. A missing intraday
row, or an empty last_price field, means no trade in that minute.
"""

from __future__ import annotations

import csv
import datetime as dt

import numpy as np

from ..errors import DataError, InputError
from .grid import BARS_PER_DAY, assign_bar
from .parse import _parse_time_ms

EOD_COLUMNS = ("date", "id", "close")
INTRADAY_COLUMNS = ("date", "id", "bar_or_time", "last_price")


def _open(path):
    try:
        return open(path, "r", newline="")
    except OSError as exc:
        raise InputError(f"cannot read price file {path}: {exc}") from exc


def _check_header(row, expected, path):
    if tuple(h.strip() for h in row) != expected:
        raise DataError(f"header mismatch in {path}: expected {list(expected)}, found {row}")


def _parse_date(s: str, cache: dict) -> dt.date:
    d = cache.get(s)
    if d is None:
        d = dt.date(int(s[0:4]), int(s[5:7]), int(s[8:10]))
        cache[s] = d
    return d


def load_eod_prices(path, delimiter: str = ",", has_header: bool = True) -> dict:
    """Return {id: {date: close}}. Duplicate (id, date) or close <= 0 is an error."""
    out: dict[str, dict[dt.date, float]] = {}
    cache: dict = {}
    with _open(path) as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        if has_header:
            _check_header(next(reader), EOD_COLUMNS, path)
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"bad end-of-day row in {path}: {row}")
            try:
                d = _parse_date(row[0], cache)
                close = float(row[2])
            except ValueError as exc:
                raise DataError(f"unparsable end-of-day row in {path}: {row}") from exc
            if close <= 0:
                raise DataError(f"non-positive close for {row[1]} on {row[0]}: {close}")
            per_id = out.setdefault(row[1], {})
            if d in per_id:
                raise DataError(f"duplicate end-of-day record for {row[1]} on {row[0]}")
            per_id[d] = close
    return out


def _parse_bar(field: str, path, row) -> int:
    if ":" in field:
        bar = assign_bar(_parse_time_ms(field))
    else:
        bar = int(field)
    if not 1 <= bar <= BARS_PER_DAY:
        raise DataError(f"off-grid intraday price row in {path}: {row}")
    return bar


def load_intraday_prices(path, delimiter: str = ",", has_header: bool = True) -> dict:
    """Return {id: {date: ndarray(237) of last prices, NaN where no trade}}."""
    out: dict[str, dict[dt.date, np.ndarray]] = {}
    cache: dict = {}
    with _open(path) as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        if has_header:
            _check_header(next(reader), INTRADAY_COLUMNS, path)
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"bad intraday row in {path}: {row}")
            if row[3].strip() == "":
                continue  # explicit no-trade minute
            try:
                d = _parse_date(row[0], cache)
                bar = _parse_bar(row[2], path, row)
                price = float(row[3])
            except ValueError as exc:
                raise DataError(f"unparsable intraday row in {path}: {row}") from exc
            if price <= 0:
                raise DataError(f"non-positive last price for {row[1]} on {row[0]} bar {bar}")
            per_id = out.setdefault(row[1], {})
            day = per_id.get(d)
            if day is None:
                day = per_id[d] = np.full(BARS_PER_DAY, np.nan)
            if not np.isnan(day[bar - 1]):
                raise DataError(f"duplicate intraday record for {row[1]} on {row[0]} bar {bar}")
            day[bar - 1] = price
    return out
