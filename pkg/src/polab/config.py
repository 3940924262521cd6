"""Run configuration, sample-period boundaries, and config hashing.

A run is driven by one JSON file; every key has a default so a config may
specify only what it overrides. Every output table records the hash of the
fully resolved configuration that produced it.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class Periods:
    """Splits the sample into pre-crash / crash / post-crash date ranges."""

    pre_crash_end: dt.date = dt.date(2015, 6, 12)
    crash_end: dt.date = dt.date(2015, 7, 7)

    def __post_init__(self):
        if self.pre_crash_end >= self.crash_end:
            raise ConfigError(
                f"pre_crash_end {self.pre_crash_end} must precede crash_end {self.crash_end}"
            )

    @staticmethod
    def names() -> tuple[str, ...]:
        return ("pre-crash", "crash", "post-crash")

    def label(self, d: dt.date) -> str:
        if d <= self.pre_crash_end:
            return "pre-crash"
        if d <= self.crash_end:
            return "crash"
        return "post-crash"


@dataclass
class RunConfig:
    # inputs
    transactions: str | None = None
    cache: str | None = None
    eod_prices: str | None = None
    intraday_prices: str | None = None
    emotion: str | None = None
    capitalization: str | None = None
    index_id: str = "SZSC"
    # transactions schema
    columns: tuple[str, ...] = (
        "trade_date", "stock_id", "time", "price", "volume", "buy_serial", "sell_serial",
    )
    delimiter: str = ","
    has_header: bool = True
    # period boundaries
    pre_crash_end: dt.date = dt.date(2015, 6, 12)
    crash_end: dt.date = dt.date(2015, 7, 7)
    # statistical knobs
    bins: int = 40
    pseudo_count: float = 0.5
    min_corr_bars: int = 30
    min_fit_samples: int = 50
    max_lag: int = 5
    min_granger_minutes: int = 60
    malformed_threshold: float = 0.001
    serial_scope: str = "bar"
    tail_only_burstiness: bool = False
    return_mode: str = "vs-prev-close"
    # execution
    out_dir: str = "out"
    threads: int = 1
    seed: int = 7
    # synthetic scenario parameters (documented in the README)
    synth: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.serial_scope not in ("bar", "day"):
            raise ConfigError(f"serial_scope must be 'bar' or 'day': {self.serial_scope!r}")
        if self.return_mode not in ("vs-prev-close", "vs-prev-minute"):
            raise ConfigError(f"unknown return_mode: {self.return_mode!r}")
        for name, lo in (
            ("bins", 1),
            ("min_corr_bars", 2),
            ("min_fit_samples", 2),
            ("max_lag", 1),
            ("min_granger_minutes", 10),
            ("threads", 1),
        ):
            if getattr(self, name) < lo:
                raise ConfigError(f"{name} must be >= {lo}, got {getattr(self, name)}")
        if not 0 <= self.malformed_threshold <= 1:
            raise ConfigError(f"malformed_threshold must be in [0, 1]: {self.malformed_threshold}")
        if self.pseudo_count <= 0:
            raise ConfigError(f"pseudo_count must be positive: {self.pseudo_count}")

    @property
    def periods(self) -> Periods:
        return Periods(self.pre_crash_end, self.crash_end)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(raw) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in raw.items():
            if key in ("pre_crash_end", "crash_end"):
                try:
                    value = dt.date.fromisoformat(value)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{key} must be an ISO date: {value!r}") from exc
            if key == "columns":
                value = tuple(value)
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def validate_paths(self, keys=None) -> None:
        """The given input paths (default: every input key) must exist
        where configured.

        Commands pass the inputs they actually read: a config may also name
        outputs of an earlier subcommand (synth, ingest) that do not exist
        yet, and the cache is never checked because ingest creates it.
        """
        import os

        if keys is None:
            keys = ("transactions", "eod_prices", "intraday_prices", "emotion", "capitalization")
        for key in keys:
            path = getattr(self, key)
            if path and not os.path.exists(path):
                raise InputError(f"configured {key} does not exist: {path}")

    def to_canonical_json(self) -> str:
        def encode(v):
            if isinstance(v, dt.date):
                return v.isoformat()
            if isinstance(v, tuple):
                return list(v)
            return v

        payload = {k: encode(v) for k, v in dataclasses.asdict(self).items()}
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_canonical_json().encode()).hexdigest()[:12]
