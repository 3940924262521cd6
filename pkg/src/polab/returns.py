"""Return series used throughout the pipeline.

Three measures per instrument: the daily percentage change of the close
versus the prior close (what trading boards display), the within-day
one-minute log-return, and the intraday percentage change versus the prior
close (the index-style board change). The first trading day of a sample has
no daily return; an intraday return is missing whenever either price it
needs is missing.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .marketdata.grid import BARS_PER_DAY

log = logging.getLogger(__name__)

#: Mainland A-shares move at most 10% a day; values this close to the band
#: are treated as limit hits (flagged, never rejected).
LIMIT_BAND_LOW = 0.0995
LIMIT_BAND_HIGH = 0.1005


@dataclass
class ReturnSeries:
    series_id: str
    dates: list
    daily_pct: dict = field(default_factory=dict)
    at_limit: frozenset = frozenset()
    intraday_log: dict = field(default_factory=dict)
    intraday_pct_vs_prev_close: dict = field(default_factory=dict)


def build_return_series(series_id: str, eod: dict, intraday: dict | None = None) -> ReturnSeries:
    """Assemble a ReturnSeries from close prices and optional intraday lasts.

    ``eod`` maps date -> close; ``intraday`` maps date -> ndarray(237) of
    last prices with NaN for untraded minutes. A non-positive price is a
    hard error naming the record.
    """
    for d, close in eod.items():
        if not close > 0:
            raise DataError(f"non-positive close for {series_id} on {d}: {close}")
    intraday = {
        d: np.asarray(arr, dtype=np.float64) for d, arr in (intraday or {}).items()
    }
    for d, arr in intraday.items():
        if arr.shape != (BARS_PER_DAY,):
            raise DataError(
                f"intraday series for {series_id} on {d} has shape {arr.shape}, "
                f"expected ({BARS_PER_DAY},)"
            )
        bad = np.nonzero(~np.isnan(arr) & (arr <= 0))[0]
        if len(bad):
            raise DataError(
                f"non-positive last price for {series_id} on {d} bar {bad[0] + 1}"
            )

    eod_dates = sorted(eod)
    all_dates = sorted(set(eod) | set(intraday))

    daily_pct: dict[dt.date, float] = {}
    at_limit = set()
    for prev, cur in zip(eod_dates, eod_dates[1:]):
        pct = eod[cur] / eod[prev] - 1.0
        daily_pct[cur] = pct
        if abs(pct) >= LIMIT_BAND_LOW:
            at_limit.add(cur)
            if abs(pct) > LIMIT_BAND_HIGH:
                log.warning(
                    "%s moved %.4f on %s, beyond the +/-10%% daily band", series_id, pct, cur
                )

    prev_close: dict[dt.date, float] = {}
    for prev, cur in zip(eod_dates, eod_dates[1:]):
        prev_close[cur] = eod[prev]
    # intraday-only dates still get a prior close when one exists before them
    for d in intraday:
        if d not in prev_close:
            earlier = [e for e in eod_dates if e < d]
            if earlier:
                prev_close[d] = eod[earlier[-1]]

    intraday_log: dict[dt.date, np.ndarray] = {}
    intraday_pct: dict[dt.date, np.ndarray] = {}
    for d, arr in intraday.items():
        logs = np.full(BARS_PER_DAY, np.nan)
        with np.errstate(invalid="ignore"):
            lp = np.log(arr)
        logs[1:] = lp[1:] - lp[:-1]
        intraday_log[d] = logs
        base = prev_close.get(d, math.nan)
        intraday_pct[d] = arr / base - 1.0 if not math.isnan(base) else np.full(BARS_PER_DAY, np.nan)

    return ReturnSeries(
        series_id=series_id,
        dates=all_dates,
        daily_pct=daily_pct,
        at_limit=frozenset(at_limit),
        intraday_log=intraday_log,
        intraday_pct_vs_prev_close=intraday_pct,
    )
