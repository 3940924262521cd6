"""Single-pass streaming parser for delimited transaction files.

Memory use is independent of file size: rows are validated and yielded one
at a time. Malformed rows are counted per reason and reported, never
silently dropped; once their share exceeds the abort threshold the parse
stops with a summary, which protects against schema drift while tolerating
isolated corruption.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from typing import Iterator

from ..errors import DataError, InputError
from .grid import assign_bar
from .schema import DEFAULT_SCHEMA, ColumnSchema, ParseReport, TransactionRecord

#: Abort threshold checked incrementally only after this many rows.
_EARLY_CHECK_FLOOR = 10_000


def _parse_time_ms(s: str) -> int:
    h, m, sec = s.split(":")
    ms = 0
    if "." in sec:
        sec, frac = sec.split(".")
        ms = int((frac + "000")[:3])
    return ((int(h) * 60 + int(m)) * 60 + int(sec)) * 1000 + ms


def iter_transactions(
    path,
    schema: ColumnSchema = DEFAULT_SCHEMA,
    *,
    report: ParseReport | None = None,
    malformed_threshold: float = 0.001,
) -> Iterator[TransactionRecord]:
    """Stream TransactionRecords from a delimited file, in file order.

    ``report`` (a ParseReport) is filled in place while iterating, so row
    counts reconcile against the source file even mid-stream. Raises
    InputError for unreadable files, DataError for a header that does not
    match the schema or for a malformed share above ``malformed_threshold``.
    """
    if report is None:
        report = ParseReport()
    try:
        fh = open(path, "r", newline="", buffering=io.DEFAULT_BUFFER_SIZE * 16)
    except OSError as exc:
        raise InputError(f"cannot read transactions file {path}: {exc}") from exc

    with fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        if schema.has_header:
            try:
                header = next(reader)
            except StopIteration:
                return
            if tuple(h.strip() for h in header) != schema.columns:
                raise DataError(
                    f"header mismatch in {path}: expected {list(schema.columns)}, "
                    f"found {header}"
                )

        i_date = schema.index_of("trade_date")
        i_stock = schema.index_of("stock_id")
        i_time = schema.index_of("time")
        i_price = schema.index_of("price")
        i_vol = schema.index_of("volume")
        i_buy = schema.index_of("buy_serial")
        i_sell = schema.index_of("sell_serial")
        ncols = len(schema.columns)

        date_cache: dict[str, dt.date] = {}
        for row in reader:
            if not row:
                continue
            report.total_rows += 1
            lineno = reader.line_num
            if len(row) != ncols:
                report.note_malformed(lineno, "field_count")
            else:
                try:
                    ds = row[i_date]
                    d = date_cache.get(ds)
                    if d is None:
                        d = dt.date(int(ds[0:4]), int(ds[5:7]), int(ds[8:10]))
                        date_cache[ds] = d
                    time_ms = _parse_time_ms(row[i_time])
                    price = float(row[i_price])
                    volume = int(row[i_vol])
                    buy_serial = int(row[i_buy])
                    sell_serial = int(row[i_sell])
                except (ValueError, IndexError):
                    report.note_malformed(lineno, "unparsable")
                else:
                    if price <= 0.0 or volume <= 0 or buy_serial <= 0 or sell_serial <= 0:
                        report.note_malformed(lineno, "nonpositive")
                    elif not 0 <= time_ms < 86_400_000:
                        report.note_malformed(lineno, "bad_time")
                    else:
                        bar = assign_bar(time_ms)
                        if bar == 0:
                            report.off_grid_rows += 1
                        report.parsed_rows += 1
                        yield TransactionRecord(
                            d, row[i_stock], time_ms, price, volume,
                            buy_serial, sell_serial, bar,
                        )

            if (
                report.malformed_rows
                and report.total_rows >= _EARLY_CHECK_FLOOR
                and report.total_rows % _EARLY_CHECK_FLOOR == 0
                and report.malformed_rows > malformed_threshold * report.total_rows
            ):
                raise DataError(
                    f"malformed share exceeds {malformed_threshold:.4%} in {path}: "
                    + report.summary()
                )

    if report.total_rows and report.malformed_rows > malformed_threshold * report.total_rows:
        raise DataError(
            f"malformed share exceeds {malformed_threshold:.4%} in {path}: " + report.summary()
        )


def parse_transactions(
    path,
    schema: ColumnSchema = DEFAULT_SCHEMA,
    *,
    malformed_threshold: float = 0.001,
) -> tuple[list[TransactionRecord], ParseReport]:
    """Eager convenience wrapper: returns (records, report). Test-sized inputs only."""
    report = ParseReport()
    records = list(
        iter_transactions(path, schema, report=report, malformed_threshold=malformed_threshold)
    )
    return records, report
