"""Sign-flip statistics of daily polarity sequences.

A flip is a sign change between consecutive nonzero polarity values. Zero
and missing minutes are removed first (order preserved), so flip counting,
depth and run lengths all share one index set. Flip counts are standardized
by the day's count of non-missing values before zero removal, which keeps
stocks of different liquidity comparable.

Everything here is a pure function of a single stock-day; days never leak
into each other.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FlipSeries:
    """One stock-day of nonzero polarity values, in minute order.

    ``effective_length`` counts the day's non-missing values before zero
    removal; it is the flip-count denominator.
    """

    stock_id: str
    trade_date: dt.date
    values: np.ndarray
    effective_length: int


@dataclass(frozen=True)
class DailyFlipSummary:
    stock_id: str
    trade_date: dt.date
    flip_count: int
    standardized_flips: float
    depth: float
    averaged_depth: float | None


@dataclass(frozen=True)
class RunLengthSample:
    """A maximal same-sign run bounded on both sides by the opposite sign."""

    stock_id: str
    trade_date: dt.date
    sign: str  # "positive" | "negative"
    length: int


def build_flip_series(stock_id: str, trade_date: dt.date, polarity_row) -> FlipSeries:
    """Drop missing and zero minutes from one stock-day, keeping order."""
    row = np.asarray(polarity_row, dtype=np.float64)
    finite = row[np.isfinite(row)]
    values = finite[finite != 0.0]
    return FlipSeries(stock_id, trade_date, values, int(len(finite)))


def flip_stats(fs: FlipSeries) -> DailyFlipSummary:
    """Flip count, standardized flips, depth and averaged depth for one day.

    Depth sums |polarity_t - polarity_{t-1}| over exactly the flip
    positions of the zero-removed sequence; averaged depth is missing on
    days without flips.
    """
    v = fs.values
    if len(v) < 2:
        flips = 0
        depth = 0.0
    else:
        signs = np.sign(v)
        flip_mask = signs[1:] != signs[:-1]
        flips = int(flip_mask.sum())
        depth = float(np.abs(np.diff(v))[flip_mask].sum())
    standardized = flips / fs.effective_length if fs.effective_length else 0.0
    averaged = depth / flips if flips else None
    return DailyFlipSummary(fs.stock_id, fs.trade_date, flips, standardized, depth, averaged)


def run_lengths(fs: FlipSeries) -> list[RunLengthSample]:
    """Completed same-sign runs, one sample per interior run.

    Runs touching the start or end of the day are censored (their true
    length is unknown) and emit nothing. Lengths count sequence positions
    of the zero-removed series.
    """
    v = fs.values
    if len(v) == 0:
        return []
    signs = np.sign(v).astype(np.int8)
    change = np.nonzero(signs[1:] != signs[:-1])[0] + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [len(v)]))
    samples = []
    for s, e in zip(starts[1:-1], ends[1:-1]):
        samples.append(
            RunLengthSample(
                fs.stock_id,
                fs.trade_date,
                "positive" if signs[s] > 0 else "negative",
                int(e - s),
            )
        )
    return samples
