"""Per-stock, per-minute trading polarity from man-times counts.

A man-times count is the number of distinct order serials on one side of
the trades inside one bar: the minimal trading decision unit the feed can
resolve without trader identities. Polarity is the normalized difference
(buy - sell) / (buy + sell), so a minute with no trades has no polarity
(missing), while balanced non-zero activity gives exactly zero.

By default a serial trading in several minutes counts once in each
(``serial_scope="bar"``). The alternative ``"day"`` scope counts each
serial once per day, attributed to the minute of its first fill; it exists
for sensitivity analysis only.
"""

from __future__ import annotations

import datetime as dt
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import DataError
from .marketdata import cache as cache_mod
from .marketdata.grid import BARS_PER_DAY
from .marketdata.parse import iter_transactions
from .marketdata.schema import DEFAULT_SCHEMA, ParseReport, TransactionRecord

# Serials are bounded by the cache's u32 columns, so bar << 33 never collides.
_SERIAL_SHIFT = 33


def count_mantimes(records: Iterable[TransactionRecord]) -> tuple[int, int]:
    """Distinct buy and sell serials in one (stock, day, bar) batch.

    Order-independent by construction; an empty batch is (0, 0).
    """
    buys = set()
    sells = set()
    for rec in records:
        buys.add(rec.buy_serial)
        sells.add(rec.sell_serial)
    return len(buys), len(sells)


def polarity(buy: int, sell: int) -> float | None:
    """(buy - sell) / (buy + sell); None when the minute had no activity."""
    total = buy + sell
    if total == 0:
        return None
    return (buy - sell) / total


@dataclass(frozen=True)
class DirectionRatios:
    """Shares of positive / negative / zero polarity minutes for one stock."""

    stock_id: str
    period: str
    pos_ratio: float
    neg_ratio: float
    zero_ratio: float
    n: int


class PolarityPanel:
    """Dense (stock, date, bar) man-times counts with derived polarity.

    ``buy`` and ``sell`` are int32 arrays of shape (n_stocks, n_dates, 237);
    ``polarity`` is float64 with NaN in minutes without activity. Read-only
    once built; queries are safe to run concurrently.
    """

    def __init__(self, stocks, dates, buy, sell):
        self.stocks = list(stocks)
        self.dates = list(dates)
        self.buy = buy
        self.sell = sell
        self._stock_idx = {s: i for i, s in enumerate(self.stocks)}
        self._date_idx = {d: j for j, d in enumerate(self.dates)}
        self._polarity = None

    @property
    def polarity(self) -> np.ndarray:
        if self._polarity is None:
            total = (self.buy + self.sell).astype(np.float64)
            with np.errstate(invalid="ignore", divide="ignore"):
                p = (self.buy - self.sell) / total
            p[total == 0] = np.nan
            self._polarity = p
        return self._polarity

    def stock_index(self, stock_id: str) -> int:
        try:
            return self._stock_idx[stock_id]
        except KeyError:
            raise KeyError(f"stock {stock_id!r} not in panel") from None

    def date_index(self, date: dt.date) -> int:
        try:
            return self._date_idx[date]
        except KeyError:
            raise KeyError(f"date {date} not in panel") from None

    def cell(self, stock_id: str, date: dt.date, bar: int):
        """(buy, sell, polarity-or-None) for one minute."""
        i, j = self.stock_index(stock_id), self.date_index(date)
        b = int(self.buy[i, j, bar - 1])
        s = int(self.sell[i, j, bar - 1])
        return b, s, polarity(b, s)

    def row(self, stock_id: str, date: dt.date) -> np.ndarray:
        """One stock-day of polarity values, shape (237,), NaN where missing."""
        return self.polarity[self.stock_index(stock_id), self.date_index(date)]

    def iter_stock_days(self) -> Iterator[tuple[str, dt.date, np.ndarray]]:
        for i, stock in enumerate(self.stocks):
            for j, date in enumerate(self.dates):
                yield stock, date, self.polarity[i, j]

    def active_cells(self) -> dict:
        """{(stock, date, bar): (buy, sell)} over minutes with any activity."""
        out = {}
        idx = np.nonzero((self.buy + self.sell) > 0)
        for i, j, k in zip(*idx):
            out[(self.stocks[i], self.dates[j], int(k) + 1)] = (
                int(self.buy[i, j, k]),
                int(self.sell[i, j, k]),
            )
        return out

    def equals(self, other: "PolarityPanel") -> bool:
        """Cell-for-cell equality of active cells (axis order may differ)."""
        return self.active_cells() == other.active_cells()

    # -- construction ------------------------------------------------------

    @classmethod
    def from_transactions(
        cls,
        path,
        schema=DEFAULT_SCHEMA,
        *,
        serial_scope: str = "bar",
        malformed_threshold: float = 0.001,
        report: ParseReport | None = None,
    ) -> "PolarityPanel":
        builder = PanelBuilder(serial_scope=serial_scope)
        builder.add_records(
            iter_transactions(
                path, schema, report=report, malformed_threshold=malformed_threshold
            )
        )
        return builder.build()

    @classmethod
    def from_cache(cls, path, *, serial_scope: str = "bar", threads: int = 1) -> "PolarityPanel":
        builder = PanelBuilder(serial_scope=serial_scope)
        blocks = cache_mod.iter_blocks(path)
        if threads <= 1:
            for blk in blocks:
                builder.add_arrays(
                    blk.stock_id, blk.trade_date, blk.bar, blk.buy_serial,
                    blk.sell_serial, blk.time_ms,
                )
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                args = (
                    (blk.stock_id, blk.trade_date, blk.bar, blk.buy_serial,
                     blk.sell_serial, blk.time_ms, serial_scope)
                    for blk in blocks
                )
                # map preserves submission order, so the merge is deterministic
                for stock, date, reduced in pool.map(_reduce_block_task, args, chunksize=16):
                    builder.add_reduced(stock, date, reduced)
        return builder.build()

    # -- export ------------------------------------------------------------

    def write_text(self, path, delimiter: str = ",", include_empty: bool = False) -> None:
        """Cells as (stock, date, bar, buy, sell, polarity|NA).

        By default only minutes with activity are written; ``include_empty``
        adds the no-trade minutes with polarity NA, one row per grid cell.
        """
        pol = self.polarity
        with open(path, "w", newline="") as fh:
            fh.write(delimiter.join(("stock_id", "date", "bar", "buy", "sell", "polarity")))
            fh.write("\n")
            for i, stock in enumerate(self.stocks):
                for j, date in enumerate(self.dates):
                    if include_empty:
                        bars = range(BARS_PER_DAY)
                    else:
                        bars = np.nonzero((self.buy[i, j] + self.sell[i, j]) > 0)[0]
                    for k in bars:
                        p = pol[i, j, k]
                        fh.write(
                            delimiter.join(
                                (
                                    stock,
                                    date.isoformat(),
                                    str(k + 1),
                                    str(int(self.buy[i, j, k])),
                                    str(int(self.sell[i, j, k])),
                                    "NA" if math.isnan(p) else format(p, ".12g"),
                                )
                            )
                        )
                        fh.write("\n")

    @classmethod
    def read_text(cls, path, delimiter: str = ",") -> "PolarityPanel":
        import csv

        cells = {}
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            header = next(reader)
            if header[:5] != ["stock_id", "date", "bar", "buy", "sell"]:
                raise DataError(f"not a panel export: {path}")
            for row in reader:
                if not row:
                    continue
                d = dt.date.fromisoformat(row[1])
                cells[(row[0], d, int(row[2]))] = (int(row[3]), int(row[4]))
        return _panel_from_cells(cells)


def _panel_from_cells(cells: dict) -> PolarityPanel:
    stocks = sorted({k[0] for k in cells})
    dates = sorted({k[1] for k in cells})
    sidx = {s: i for i, s in enumerate(stocks)}
    didx = {d: j for j, d in enumerate(dates)}
    buy = np.zeros((len(stocks), len(dates), BARS_PER_DAY), dtype=np.int32)
    sell = np.zeros_like(buy)
    for (stock, date, bar), (b, s) in cells.items():
        buy[sidx[stock], didx[date], bar - 1] = b
        sell[sidx[stock], didx[date], bar - 1] = s
    return PolarityPanel(stocks, dates, buy, sell)


def _reduce_bar_scope(bar, buy_serial, sell_serial):
    on = bar > 0
    b = bar[on].astype(np.int64)
    bkeys = np.unique((b << _SERIAL_SHIFT) | buy_serial[on].astype(np.int64))
    skeys = np.unique((b << _SERIAL_SHIFT) | sell_serial[on].astype(np.int64))
    return bkeys, skeys


def _reduce_day_scope(bar, buy_serial, sell_serial, time_ms, order0):
    on = bar > 0
    b = bar[on].astype(np.int64)
    t = time_ms[on].astype(np.int64)
    order = np.arange(order0, order0 + len(b), dtype=np.int64)
    parts = []
    for serial in (buy_serial[on].astype(np.int64), sell_serial[on].astype(np.int64)):
        srt = np.lexsort((order, t))
        _, first = np.unique(serial[srt], return_index=True)
        sel = srt[first]
        parts.append((serial[sel], t[sel], order[sel], b[sel]))
    return parts


def _reduce_block_task(args):
    stock, date, bar, buy_serial, sell_serial, time_ms, scope = args
    if scope == "bar":
        return stock, date, _reduce_bar_scope(bar, buy_serial, sell_serial)
    return stock, date, _reduce_day_scope(bar, buy_serial, sell_serial, time_ms, 0)


class PanelBuilder:
    """Accumulates man-times evidence per (stock, day), then builds the panel.

    Incoming rows are reduced immediately to distinct-serial keys, so memory
    scales with participant counts rather than fills. Accumulation is
    additive and order-independent, which makes partitioned or parallel
    feeding safe.
    """

    _FLUSH_ROWS = 1 << 18

    def __init__(self, serial_scope: str = "bar"):
        if serial_scope not in ("bar", "day"):
            raise ValueError(f"serial_scope must be 'bar' or 'day', got {serial_scope!r}")
        self.serial_scope = serial_scope
        self._reduced: dict[tuple[str, dt.date], list] = {}
        self._row_buffers: dict[tuple[str, dt.date], list[list]] = {}
        self._buffered = 0
        self._order: dict[tuple[str, dt.date], int] = {}

    def add_arrays(self, stock, date, bar, buy_serial, sell_serial, time_ms) -> None:
        key = (stock, date)
        if self.serial_scope == "bar":
            reduced = _reduce_bar_scope(
                np.asarray(bar), np.asarray(buy_serial), np.asarray(sell_serial)
            )
        else:
            order0 = self._order.get(key, 0)
            self._order[key] = order0 + len(bar)
            reduced = _reduce_day_scope(
                np.asarray(bar), np.asarray(buy_serial), np.asarray(sell_serial),
                np.asarray(time_ms), order0,
            )
        self._reduced.setdefault(key, []).append(reduced)

    def add_reduced(self, stock, date, reduced) -> None:
        self._reduced.setdefault((stock, date), []).append(reduced)

    def add_records(self, records: Iterable[TransactionRecord]) -> None:
        for rec in records:
            if rec.bar == 0:
                continue
            cols = self._row_buffers.get((rec.stock_id, rec.trade_date))
            if cols is None:
                cols = self._row_buffers[(rec.stock_id, rec.trade_date)] = [[], [], [], []]
            cols[0].append(rec.bar)
            cols[1].append(rec.buy_serial)
            cols[2].append(rec.sell_serial)
            cols[3].append(rec.time_ms)
            self._buffered += 1
            if self._buffered >= self._FLUSH_ROWS:
                self._flush_rows()
        self._flush_rows()

    def _flush_rows(self) -> None:
        for (stock, date), cols in self._row_buffers.items():
            self.add_arrays(
                stock, date,
                np.asarray(cols[0], dtype=np.int64),
                np.asarray(cols[1], dtype=np.int64),
                np.asarray(cols[2], dtype=np.int64),
                np.asarray(cols[3], dtype=np.int64),
            )
        self._row_buffers.clear()
        self._buffered = 0

    def build(self) -> PolarityPanel:
        self._flush_rows()
        stocks = sorted({k[0] for k in self._reduced})
        dates = sorted({k[1] for k in self._reduced})
        sidx = {s: i for i, s in enumerate(stocks)}
        didx = {d: j for j, d in enumerate(dates)}
        buy = np.zeros((len(stocks), len(dates), BARS_PER_DAY), dtype=np.int32)
        sell = np.zeros_like(buy)
        for (stock, date), parts in self._reduced.items():
            i, j = sidx[stock], didx[date]
            if self.serial_scope == "bar":
                bkeys = np.unique(np.concatenate([p[0] for p in parts]))
                skeys = np.unique(np.concatenate([p[1] for p in parts]))
                buy[i, j] = np.bincount(
                    (bkeys >> _SERIAL_SHIFT), minlength=BARS_PER_DAY + 1
                )[1:]
                sell[i, j] = np.bincount(
                    (skeys >> _SERIAL_SHIFT), minlength=BARS_PER_DAY + 1
                )[1:]
            else:
                for side, target in ((0, buy), (1, sell)):
                    serial = np.concatenate([p[side][0] for p in parts])
                    t = np.concatenate([p[side][1] for p in parts])
                    order = np.concatenate([p[side][2] for p in parts])
                    b = np.concatenate([p[side][3] for p in parts])
                    srt = np.lexsort((order, t, serial))
                    s_sorted = serial[srt]
                    first = np.ones(len(s_sorted), dtype=bool)
                    first[1:] = s_sorted[1:] != s_sorted[:-1]
                    target[i, j] = np.bincount(
                        b[srt][first], minlength=BARS_PER_DAY + 1
                    )[1:]
        return PolarityPanel(stocks, dates, buy, sell)


# -- aggregate statistics ----------------------------------------------------


def direction_ratios(
    panel: PolarityPanel, stock_id: str, dates=None, period: str = "all"
) -> DirectionRatios | None:
    """Positive/negative/zero minute shares over non-missing cells.

    Returns None when the stock has no non-missing cell in the period.
    """
    i = panel.stock_index(stock_id)
    if dates is None:
        rows = panel.polarity[i]
    else:
        cols = [panel.date_index(d) for d in dates]
        rows = panel.polarity[i, cols]
    vals = rows[np.isfinite(rows)]
    n = len(vals)
    if n == 0:
        return None
    pos = int((vals > 0).sum())
    neg = int((vals < 0).sum())
    zero = n - pos - neg
    return DirectionRatios(stock_id, period, pos / n, neg / n, zero / n, n)


def market_polarity(panel: PolarityPanel, date: dt.date, bar: int) -> float:
    """Equal-weighted mean polarity over stocks active at (date, bar); NaN if none."""
    col = panel.polarity[:, panel.date_index(date), bar - 1]
    finite = col[np.isfinite(col)]
    if len(finite) == 0:
        return math.nan
    return float(finite.mean())


def market_polarity_series(panel: PolarityPanel) -> np.ndarray:
    """Market polarity for every (date, bar); shape (n_dates, 237), NaN if no stock."""
    with np.errstate(invalid="ignore"):
        counts = np.isfinite(panel.polarity).sum(axis=0)
        sums = np.nansum(panel.polarity, axis=0)
        out = np.divide(sums, counts, out=np.full(counts.shape, np.nan), where=counts > 0)
    return out


def daily_polarity_at_index_min(panel: PolarityPanel, index_returns, date: dt.date) -> float:
    """Market polarity at the minute the index return hits its daily minimum.

    The index return is the intraday percentage change versus the prior
    close; ties resolve to the earliest bar. Raises DataError when the index
    series has no values for the date.
    """
    series = index_returns.intraday_pct_vs_prev_close.get(date)
    if series is None or not np.isfinite(series).any():
        raise DataError(f"index return series missing for {date}")
    bar = int(np.nanargmin(series)) + 1
    return market_polarity(panel, date, bar)
