"""Compact binary cache of parsed transactions, for fast re-analysis.

Layout (all little-endian), version 1:

    header:  magic "PLAB1" | u16 version | u8 reserved | u64 n_blocks
    block:   u16 stock-id length | stock-id utf8 | u32 date yyyymmdd | u32 n_rows
             u32 time_ms[n] | u8 bar[n] | f64 price[n] | u32 volume[n]
             u32 buy_serial[n] | u32 sell_serial[n]

Each block holds rows of one (stock, trading day). A key may repeat across
blocks (the writer flushes in bounded-memory chunks); readers concatenate
repeats in file order. Off-grid rows are kept with bar 0 so row counts
reconcile against the source file.
"""

from __future__ import annotations

import datetime as dt
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ..errors import DataError, InputError
from .schema import TransactionRecord

MAGIC = b"PLAB1"
VERSION = 1

_HEADER = struct.Struct("<5sHBQ")
_BLOCK_HEAD = struct.Struct("<H")
_BLOCK_META = struct.Struct("<II")

_U32_MAX = 2**32 - 1

_COLUMNS = (
    ("time_ms", "<u4"),
    ("bar", "<u1"),
    ("price", "<f8"),
    ("volume", "<u4"),
    ("buy_serial", "<u4"),
    ("sell_serial", "<u4"),
)


@dataclass
class CacheBlock:
    stock_id: str
    trade_date: dt.date
    time_ms: np.ndarray
    bar: np.ndarray
    price: np.ndarray
    volume: np.ndarray
    buy_serial: np.ndarray
    sell_serial: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.time_ms)


def _date_to_int(d: dt.date) -> int:
    return d.year * 10_000 + d.month * 100 + d.day


def _int_to_date(v: int) -> dt.date:
    return dt.date(v // 10_000, (v // 100) % 100, v % 100)


class CacheWriter:
    """Appends per-(stock, day) blocks; block count is patched on close."""

    def __init__(self, path):
        self._path = path
        try:
            self._fh = open(path, "wb")
        except OSError as exc:
            raise InputError(f"cannot create cache file {path}: {exc}") from exc
        self._fh.write(_HEADER.pack(MAGIC, VERSION, 0, 0))
        self.n_blocks = 0
        self.n_rows = 0

    def append(self, block: CacheBlock) -> None:
        n = block.n_rows
        for name in ("volume", "buy_serial", "sell_serial"):
            col = getattr(block, name)
            if n and int(np.max(col)) > _U32_MAX:
                raise DataError(f"{name} overflows the cache's u32 column")
        sid = block.stock_id.encode("utf-8")
        self._fh.write(_BLOCK_HEAD.pack(len(sid)))
        self._fh.write(sid)
        self._fh.write(_BLOCK_META.pack(_date_to_int(block.trade_date), n))
        for name, dtype in _COLUMNS:
            self._fh.write(np.ascontiguousarray(getattr(block, name), dtype=dtype).tobytes())
        self.n_blocks += 1
        self.n_rows += n

    def close(self) -> None:
        self._fh.seek(0)
        self._fh.write(_HEADER.pack(MAGIC, VERSION, 0, self.n_blocks))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def iter_blocks(path) -> Iterator[CacheBlock]:
    """Yield cache blocks in file order. Validates magic and version."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot read cache file {path}: {exc}") from exc
    with fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise DataError(f"{path} is not a polab cache: truncated header")
        magic, version, _, n_blocks = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DataError(f"{path} is not a polab cache: bad magic {magic!r}")
        if version != VERSION:
            raise DataError(f"unsupported cache version {version} in {path}")
        for _ in range(n_blocks):
            (sid_len,) = _BLOCK_HEAD.unpack(fh.read(_BLOCK_HEAD.size))
            stock_id = fh.read(sid_len).decode("utf-8")
            date_int, n = _BLOCK_META.unpack(fh.read(_BLOCK_META.size))
            cols = {}
            for name, dtype in _COLUMNS:
                dt_ = np.dtype(dtype)
                raw = fh.read(dt_.itemsize * n)
                if len(raw) != dt_.itemsize * n:
                    raise DataError(f"truncated block in {path}")
                cols[name] = np.frombuffer(raw, dtype=dt_)
            yield CacheBlock(stock_id, _int_to_date(date_int), **cols)


def write_cache(path, records: Iterable[TransactionRecord], flush_rows: int = 1 << 20) -> int:
    """Build a cache from a record stream with bounded memory.

    Buffers rows per (stock, day) and flushes every group once the buffered
    total reaches ``flush_rows``, so a key may span several blocks. Returns
    the number of rows written.
    """
    buffers: dict[tuple[str, dt.date], list[list]] = {}
    buffered = 0

    def flush(writer: CacheWriter) -> None:
        nonlocal buffered
        for (stock, day), cols in buffers.items():
            writer.append(
                CacheBlock(
                    stock,
                    day,
                    np.asarray(cols[0], dtype="<u4"),
                    np.asarray(cols[1], dtype="<u1"),
                    np.asarray(cols[2], dtype="<f8"),
                    np.asarray(cols[3], dtype="<u4"),
                    np.asarray(cols[4], dtype="<u4"),
                    np.asarray(cols[5], dtype="<u4"),
                )
            )
        buffers.clear()
        buffered = 0

    with CacheWriter(path) as writer:
        for rec in records:
            cols = buffers.get((rec.stock_id, rec.trade_date))
            if cols is None:
                cols = buffers[(rec.stock_id, rec.trade_date)] = [[], [], [], [], [], []]
            cols[0].append(rec.time_ms)
            cols[1].append(rec.bar)
            cols[2].append(rec.price)
            cols[3].append(rec.volume)
            cols[4].append(rec.buy_serial)
            cols[5].append(rec.sell_serial)
            buffered += 1
            if buffered >= flush_rows:
                flush(writer)
        flush(writer)
        return writer.n_rows
