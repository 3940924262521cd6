"""Command-line entry point: ingest -> compute -> fit -> report.

Every subcommand reads one JSON config (``--config``), optionally patched
with ``--set key=value`` overrides, and writes delimited plot-ready tables
into the output directory. Artifacts carry the config hash and the method
decisions that produced them; re-running with unchanged inputs reproduces
them byte for byte.

Exit codes: 0 ok, 2 config, 3 io, 4 data, 5 numeric.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, coupling, flips, tailfit
from .config import RunConfig
from .errors import ConfigError, DataError, FitRefusedError, InputError, PolabError
from .marketdata import cache as cache_mod
from .marketdata.parse import iter_transactions
from .marketdata.prices import load_eod_prices, load_intraday_prices
from .marketdata.schema import ColumnSchema, ParseReport
from .panel import (
    PolarityPanel,
    _panel_from_cells,
    daily_polarity_at_index_min,
    direction_ratios,
    market_polarity_series,
)
from .returns import build_return_series
from .synth import RegimeSpec, generate
from .tables import write_table
from .verify import run_oracle_suite


def _schema(cfg: RunConfig) -> ColumnSchema:
    return ColumnSchema(columns=cfg.columns, delimiter=cfg.delimiter, has_header=cfg.has_header)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_panel(cfg: RunConfig) -> PolarityPanel:
    if cfg.cache and Path(cfg.cache).exists():
        return PolarityPanel.from_cache(
            cfg.cache, serial_scope=cfg.serial_scope, threads=cfg.threads
        )
    if cfg.transactions:
        return PolarityPanel.from_transactions(
            cfg.transactions,
            _schema(cfg),
            serial_scope=cfg.serial_scope,
            malformed_threshold=cfg.malformed_threshold,
        )
    raise ConfigError("neither 'cache' nor 'transactions' is configured")


def _index_returns(cfg: RunConfig):
    if not cfg.eod_prices or not cfg.intraday_prices:
        raise ConfigError("'eod_prices' and 'intraday_prices' are required for this command")
    eod = load_eod_prices(cfg.eod_prices, cfg.delimiter, cfg.has_header)
    intraday = load_intraday_prices(cfg.intraday_prices, cfg.delimiter, cfg.has_header)
    if cfg.index_id not in eod or cfg.index_id not in intraday:
        raise DataError(f"index id {cfg.index_id!r} absent from price files")
    series = build_return_series(cfg.index_id, eod[cfg.index_id], intraday[cfg.index_id])
    return eod, intraday, series


def _stock_log_returns(cfg: RunConfig, panel: PolarityPanel, intraday: dict) -> dict:
    """{(stock, date): ndarray(237) of log-returns} for stocks in the panel."""
    out = {}
    for stock in panel.stocks:
        per_day = intraday.get(stock)
        if not per_day:
            continue
        series = build_return_series(stock, {}, per_day)
        for date in panel.dates:
            logs = series.intraday_log.get(date)
            if logs is not None:
                out[(stock, date)] = logs
    return out


# -- subcommands ----------------------------------------------------------------


def _cmd_ingest(cfg: RunConfig) -> int:
    if not cfg.transactions:
        raise ConfigError("'transactions' is required for ingest")
    out = _out_dir(cfg)
    cache_path = Path(cfg.cache) if cfg.cache else out / "cache.plab"
    report = ParseReport()
    n = cache_mod.write_cache(
        cache_path,
        iter_transactions(
            cfg.transactions,
            _schema(cfg),
            report=report,
            malformed_threshold=cfg.malformed_threshold,
        ),
    )
    rows = [
        ("rows_total", report.total_rows),
        ("rows_parsed", report.parsed_rows),
        ("rows_malformed", report.malformed_rows),
        ("rows_off_grid", report.off_grid_rows),
        ("rows_cached", n),
    ]
    for reason, count in sorted(report.malformed_reasons.items()):
        rows.append((f"malformed_{reason}", count))
    write_table(
        out / "ingest_report.csv",
        "ingest-report",
        ("metric", "value"),
        rows,
        config_hash=cfg.config_hash(),
        meta={"cache": cache_path, "source": cfg.transactions},
    )
    print(f"ingest: {n} rows cached to {cache_path} ({report.summary()})")
    return 0


def _moments(values: np.ndarray):
    mean = float(values.mean())
    centered = values - mean
    m2 = float((centered**2).mean())
    m4 = float((centered**4).mean())
    std = float(np.sqrt(m2))
    kurt = m4 / (m2 * m2) - 3.0 if m2 > 0 else float("nan")
    return mean, std, kurt


def _cmd_polarity(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    panel.write_text(out / "panel.csv")
    periods = cfg.periods
    pol = panel.polarity
    rows = []
    scopes = [("all", list(range(len(panel.dates))))]
    for name in periods.names():
        scopes.append((name, [j for j, d in enumerate(panel.dates) if periods.label(d) == name]))
    for name, cols in scopes:
        if not cols:
            rows.append((name, None, None, None, 0))
            continue
        vals = pol[:, cols, :]
        vals = vals[np.isfinite(vals)]
        if len(vals) == 0:
            rows.append((name, None, None, None, 0))
            continue
        mean, std, kurt = _moments(vals)
        rows.append((name, mean, std, kurt, len(vals)))
    write_table(
        out / "polarity_moments.csv",
        "polarity-moments",
        ("period", "mean", "std", "kurtosis_excess", "n_minutes"),
        rows,
        config_hash=cfg.config_hash(),
        meta={
            "units": "polarity in [-1,1], one value per stock-minute with activity",
            "kurtosis": "excess convention, normal = 0",
            "serial_scope": cfg.serial_scope,
        },
    )
    print(f"polarity: panel {len(panel.stocks)} stocks x {len(panel.dates)} dates -> {out}")
    return 0


def _load_capitalization(path) -> dict:
    import csv

    caps = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read capitalization file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ("id", "capitalization"):
            raise DataError(f"capitalization file must have header 'id,capitalization': {path}")
        for row in reader:
            if row:
                caps[row[0]] = float(row[1])
    return caps


def _cmd_ratios(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    periods = cfg.periods
    caps = _load_capitalization(cfg.capitalization) if cfg.capitalization else None
    rows = []
    for stock in panel.stocks:
        for name in ("all",) + periods.names():
            if name == "all":
                dates = None
            else:
                dates = [d for d in panel.dates if periods.label(d) == name]
                if not dates:
                    continue
            ratios = direction_ratios(panel, stock, dates=dates, period=name)
            if ratios is None:
                continue
            row = [stock, name, ratios.pos_ratio, ratios.neg_ratio, ratios.zero_ratio, ratios.n]
            if caps is not None:
                row.append(caps.get(stock))
            rows.append(tuple(row))
    columns = ["stock_id", "period", "pos_ratio", "neg_ratio", "zero_ratio", "n_minutes"]
    if caps is not None:
        columns.append("capitalization")
    write_table(
        out / "direction_ratios.csv",
        "direction-ratios",
        columns,
        rows,
        config_hash=cfg.config_hash(),
        meta={"ratios": "shares over non-missing minutes; pos+neg+zero = 1"},
    )
    print(f"ratios: {len(rows)} rows -> {out / 'direction_ratios.csv'}")
    return 0


def _cmd_flips(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    periods = cfg.periods
    eod = load_eod_prices(cfg.eod_prices, cfg.delimiter, cfg.has_header) if cfg.eod_prices else {}
    daily_returns = {}
    at_limit = {}
    for stock in panel.stocks:
        if stock in eod:
            rs = build_return_series(stock, eod[stock])
            daily_returns[stock] = rs.daily_pct
            at_limit[stock] = rs.at_limit

    day_rows = []
    by_date: dict = {}
    for stock, date, row in panel.iter_stock_days():
        fs = flips.build_flip_series(stock, date, row)
        if fs.effective_length == 0:
            continue
        stats = flips.flip_stats(fs)
        ret = daily_returns.get(stock, {}).get(date)
        day_rows.append(
            (
                stock,
                date,
                periods.label(date),
                stats.flip_count,
                stats.standardized_flips,
                stats.depth,
                stats.averaged_depth,
                ret,
                date in at_limit.get(stock, ()),
            )
        )
        if stats.averaged_depth is not None:
            by_date.setdefault(date, []).append(stats.averaged_depth)
    write_table(
        out / "flip_daily.csv",
        "flip-daily",
        (
            "stock_id", "date", "period", "flip_count", "standardized_flips",
            "depth", "averaged_depth", "daily_return", "at_limit",
        ),
        day_rows,
        config_hash=cfg.config_hash(),
        meta={
            "preprocessing": "zeros and missing minutes removed before flip detection",
            "standardized_flips": "flip count / non-missing minutes of the day",
        },
    )

    summary_rows = []
    for date in sorted(by_date):
        s = coupling.five_number_summary(by_date[date])
        summary_rows.append(
            (date, s.q1, s.median, s.q3, s.lower_fence, s.upper_fence, s.n, s.n_outliers)
        )
    write_table(
        out / "flip_depth_summary.csv",
        "flip-depth-summary",
        ("date", "q1", "median", "q3", "lower_fence", "upper_fence", "n", "n_outliers"),
        summary_rows,
        config_hash=cfg.config_hash(),
        meta={"statistic": "averaged flipping depth per stock, summarized across stocks per day"},
    )
    print(f"flips: {len(day_rows)} stock-days -> {out}")
    return 0


def _run_length_samples(panel: PolarityPanel):
    for stock, date, row in panel.iter_stock_days():
        fs = flips.build_flip_series(stock, date, row)
        yield from flips.run_lengths(fs)


def _cmd_runlengths(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    rows = [(s.stock_id, s.trade_date, s.sign, s.length) for s in _run_length_samples(panel)]
    write_table(
        out / "run_lengths.csv",
        "run-lengths",
        ("stock_id", "date", "sign", "length"),
        rows,
        config_hash=cfg.config_hash(),
        meta={
            "length": "positions of the zero-removed minute sequence, interior runs only",
            "boundary_runs": "censored at day edges, excluded",
        },
    )
    print(f"runlengths: {len(rows)} samples -> {out / 'run_lengths.csv'}")
    return 0


def _cmd_fit(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    samples: dict = {}
    for s in _run_length_samples(panel):
        samples.setdefault((s.trade_date, s.sign), []).append(s.length)
    rows = []
    for (date, sign) in sorted(samples):
        lengths = samples[(date, sign)]
        fit_fields = [None] * 5
        reason = None
        tail_lengths = lengths
        try:
            fit = tailfit.fit_power_law(lengths, min_samples=cfg.min_fit_samples)
            fit_fields = [fit.alpha, fit.stderr_alpha, fit.xmin, fit.ks_distance, fit.n_tail]
            if cfg.tail_only_burstiness:
                tail_lengths = [v for v in lengths if v >= fit.xmin]
        except FitRefusedError as exc:
            reason = str(exc)
        b = tailfit.burstiness(tail_lengths)
        rows.append(
            (date, sign, *fit_fields, len(lengths), b.b, b.mean_tau, b.std_tau, reason)
        )
    write_table(
        out / "tail_fits.csv",
        "tail-fits",
        (
            "date", "sign", "alpha", "stderr_alpha", "xmin", "ks_distance",
            "n_tail", "n_total", "burstiness", "mean_tau", "std_tau", "refusal",
        ),
        rows,
        config_hash=cfg.config_hash(),
        meta={
            "fit": "discrete maximum likelihood, cutoff by KS scan",
            "burstiness": "tail-only" if cfg.tail_only_burstiness else "raw empirical lengths",
        },
    )
    print(f"fit: {len(rows)} (date, sign) groups -> {out / 'tail_fits.csv'}")
    return 0


def _cmd_market(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    _, _, index_series = _index_returns(cfg)
    mp = market_polarity_series(panel)
    rows = []
    mp_flat = []
    idx_flat = []
    for j, date in enumerate(panel.dates):
        pct = index_series.intraday_pct_vs_prev_close.get(date)
        for k in range(mp.shape[1]):
            ival = float(pct[k]) if pct is not None else None
            rows.append((date, k + 1, mp[j, k], ival))
            if pct is not None:
                mp_flat.append(mp[j, k])
                idx_flat.append(pct[k])
    write_table(
        out / "market_minutes.csv",
        "market-minutes",
        ("date", "bar", "market_polarity", "index_pct_vs_prev_close"),
        rows,
        config_hash=cfg.config_hash(),
        meta={"market_polarity": "mean polarity over stocks active in the minute"},
    )

    r = coupling.market_correlation(np.array(mp_flat), np.array(idx_flat))
    n_pairs = int(np.sum(np.isfinite(mp_flat) & np.isfinite(idx_flat)))
    write_table(
        out / "market_summary.csv",
        "market-summary",
        ("statistic", "value"),
        [("pearson_r", r), ("n_minutes", n_pairs)],
        config_hash=cfg.config_hash(),
        meta={"pairing": "minute-matched market polarity vs index change on prior close"},
    )

    daily_rows = []
    for date in panel.dates:
        pct = index_series.intraday_pct_vs_prev_close.get(date)
        if pct is None or not np.isfinite(pct).any():
            continue
        bar = int(np.nanargmin(pct)) + 1
        daily_rows.append((date, bar, daily_polarity_at_index_min(panel, index_series, date)))
    write_table(
        out / "daily_polarity_at_index_min.csv",
        "daily-polarity-at-index-min",
        ("date", "bar", "market_polarity"),
        daily_rows,
        config_hash=cfg.config_hash(),
        meta={"bar": "minute of the day's lowest index change vs prior close, earliest on ties"},
    )
    print(f"market: r={r:.4f} over {n_pairs} minutes -> {out}")
    return 0


def _corr_dists(cfg: RunConfig, panel: PolarityPanel, intraday: dict):
    log_returns = _stock_log_returns(cfg, panel, intraday)
    dists = []
    for date in panel.dates:
        coeffs = []
        for stock in panel.stocks:
            logs = log_returns.get((stock, date))
            if logs is None:
                continue
            r = coupling.stock_day_correlation(
                panel.row(stock, date), logs, min_bars=cfg.min_corr_bars
            )
            if r is not None:
                coeffs.append(r)
        dists.append(
            coupling.build_corr_dist(date, coeffs, bins=cfg.bins, pseudo_count=cfg.pseudo_count)
        )
    return dists


def _cmd_kl(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    if not cfg.intraday_prices:
        raise ConfigError("'intraday_prices' is required for kl")
    intraday = load_intraday_prices(cfg.intraday_prices, cfg.delimiter, cfg.has_header)
    dists = _corr_dists(cfg, panel, intraday)

    hist_rows = []
    for dist in dists:
        for b in range(len(dist.histogram)):
            hist_rows.append(
                (dist.trade_date, dist.bin_edges[b], dist.bin_edges[b + 1], dist.histogram[b])
            )
    write_table(
        out / "corr_hists.csv",
        "correlation-histograms",
        ("date", "bin_lo", "bin_hi", "probability"),
        hist_rows,
        config_hash=cfg.config_hash(),
        meta={
            "bins": f"{cfg.bins} equal-width bins on [-1,1]",
            "smoothing": f"additive pseudo-count {cfg.pseudo_count} per bin",
        },
    )

    kl_rows = []
    for prev, cur in zip(dists, dists[1:]):
        kl_rows.append(
            (cur.trade_date, coupling.kl_divergence(cur, prev), cur.n_stocks, prev.n_stocks)
        )
    write_table(
        out / "corr_kl.csv",
        "correlation-divergence",
        ("date", "kl_vs_prev_day", "n_stocks", "n_stocks_prev"),
        kl_rows,
        config_hash=cfg.config_hash(),
        meta={
            "divergence": "KL(today || previous trading day), natural log",
            "coefficients": f"stock-day Pearson r over >= {cfg.min_corr_bars} aligned minutes",
        },
    )
    print(f"kl: {len(kl_rows)} day pairs -> {out / 'corr_kl.csv'}")
    return 0


def _granger_days(cfg: RunConfig, panel: PolarityPanel, index_series) -> dict:
    mp = market_polarity_series(panel)
    days = {}
    for j, date in enumerate(panel.dates):
        if cfg.return_mode == "vs-prev-close":
            ret = index_series.intraday_pct_vs_prev_close.get(date)
        else:
            ret = index_series.intraday_log.get(date)
        if ret is None:
            continue
        days[date] = (mp[j], ret)
    return days


def _cmd_granger(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    _, _, index_series = _index_returns(cfg)
    days = _granger_days(cfg, panel, index_series)
    summary = coupling.granger_pass_rates(
        days, max_lag=cfg.max_lag, min_minutes=cfg.min_granger_minutes
    )
    write_table(
        out / "granger_days.csv",
        "granger-days",
        ("date", "direction", "lag", "f_stat", "p_value", "reject_at_5pct"),
        [
            (r.trade_date, r.direction, r.lag, r.f_stat, r.p_value, r.reject_at_5pct)
            for r in summary.results
        ],
        config_hash=cfg.config_hash(),
        meta={
            "return_mode": cfg.return_mode,
            "lag_selection": f"BIC over 1..{cfg.max_lag}, per day",
        },
    )
    write_table(
        out / "granger_summary.csv",
        "granger-summary",
        ("direction", "pass_rate", "n_tested", "n_skipped"),
        [
            (d, summary.pass_rate[d], summary.n_tested, len(summary.skipped))
            for d in coupling.DIRECTIONS
        ],
        config_hash=cfg.config_hash(),
        meta={"pass": "F-test rejection at 5%"},
    )
    write_table(
        out / "granger_skipped.csv",
        "granger-skipped",
        ("date", "reason"),
        summary.skipped,
        config_hash=cfg.config_hash(),
    )
    rates = {d: round(summary.pass_rate[d], 4) for d in coupling.DIRECTIONS}
    print(f"granger: {rates} over {summary.n_tested} days -> {out}")
    return 0


def _cmd_impact(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    panel = _load_panel(cfg)
    if not cfg.intraday_prices:
        raise ConfigError("'intraday_prices' is required for impact")
    intraday = load_intraday_prices(cfg.intraday_prices, cfg.delimiter, cfg.has_header)
    log_returns = _stock_log_returns(cfg, panel, intraday)
    periods = cfg.periods

    pairs: dict = {"all": ([], [])}
    for name in periods.names():
        pairs[name] = ([], [])
    for stock, date, row in panel.iter_stock_days():
        logs = log_returns.get((stock, date))
        if logs is None:
            continue
        keep = np.isfinite(row) & np.isfinite(logs)
        if not keep.any():
            continue
        for scope in ("all", periods.label(date)):
            pairs[scope][0].append(row[keep])
            pairs[scope][1].append(logs[keep])

    rows = []
    for scope in ("all",) + periods.names():
        ps, rs = pairs[scope]
        if not ps:
            continue
        groups = coupling.price_impact_groups(np.concatenate(ps), np.concatenate(rs))
        for group in coupling.GROUPS:
            s = groups[group]
            if s is None:
                rows.append((scope, group, None, None, None, None, None, 0, 0))
            else:
                rows.append(
                    (
                        scope, group, s.q1, s.median, s.q3,
                        s.lower_fence, s.upper_fence, s.n, s.n_outliers,
                    )
                )
    write_table(
        out / "price_impact.csv",
        "price-impact",
        (
            "period", "sign_group", "q1", "median", "q3",
            "lower_fence", "upper_fence", "n", "n_outliers",
        ),
        rows,
        config_hash=cfg.config_hash(),
        meta={
            "pairing": "minute polarity vs same-minute log-return, missing minutes excluded",
            "whiskers": "quartile fences at 1.5*IQR; outliers counted, not dropped",
        },
    )
    print(f"impact: {len(rows)} rows -> {out / 'price_impact.csv'}")
    return 0


def _load_emotion(path) -> dict:
    import csv
    import datetime as dt

    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read emotion file {path}: {exc}") from exc
    out = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ("date", "rjf"):
            raise DataError(f"emotion file must have header 'date,rjf': {path}")
        for row in reader:
            if not row:
                continue
            value = float(row[1])
            if value <= 0:
                raise DataError(f"rjf must be positive: {row}")
            out[dt.date.fromisoformat(row[0])] = value
    return out


def _cmd_emotion(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    if not cfg.emotion:
        raise ConfigError("'emotion' (a date,rjf file) is required for emotion")
    panel = _load_panel(cfg)
    _, _, index_series = _index_returns(cfg)
    rjf = _load_emotion(cfg.emotion)
    daily = {}
    for date in panel.dates:
        pct = index_series.intraday_pct_vs_prev_close.get(date)
        if pct is None or not np.isfinite(pct).any():
            continue
        value = daily_polarity_at_index_min(panel, index_series, date)
        if np.isfinite(value):
            daily[date] = value
    corr = coupling.emotion_correlation(daily, rjf, cfg.periods)
    periods = cfg.periods
    joined = sorted(set(daily) & set(rjf))
    counts = {"overall": len(joined)}
    for name in periods.names():
        counts[name] = sum(1 for d in joined if periods.label(d) == name)
    rows = [(name, corr[name], counts[name]) for name in ("overall",) + periods.names()]
    write_table(
        out / "emotion_correlation.csv",
        "emotion-correlation",
        ("period", "pearson_r", "n_days"),
        rows,
        config_hash=cfg.config_hash(),
        meta={"daily_polarity": "market polarity at the index-minimum minute"},
    )
    print(f"emotion: {rows} -> {out / 'emotion_correlation.csv'}")
    return 0


def _cmd_synth(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    spec = dict(cfg.synth)
    if not spec:
        raise ConfigError("config key 'synth' must describe the scenario to generate")
    import datetime as dt

    try:
        n_stocks = int(spec.pop("n_stocks", 10))
        n_days = int(spec.pop("n_days", 2))
        start = dt.date.fromisoformat(spec.pop("start_date", "2015-05-04"))
        regime_specs = spec.pop("regimes")
    except KeyError as exc:
        raise ConfigError(f"synth config is missing {exc}") from exc
    regimes = []
    for r in regime_specs:
        r = dict(r)
        if "bars" in r and r["bars"] is not None:
            r["bars"] = tuple(r["bars"])
        if "polarity_pattern" in r and r["polarity_pattern"] is not None:
            r["polarity_pattern"] = tuple(r["polarity_pattern"])
        try:
            regimes.append(RegimeSpec(**r))
        except TypeError as exc:
            raise ConfigError(f"bad regime spec {r}: {exc}") from exc
    extra = {
        k: spec[k]
        for k in ("index_id", "start_price", "index_start", "return_scale", "n_offgrid_rows")
        if k in spec
    }
    dates = []
    d = start
    while len(dates) < n_days:
        if d.weekday() < 5:
            dates.append(d)
        d += dt.timedelta(days=1)
    files, truth = generate(regimes, n_stocks, dates, cfg.seed, out, **extra)
    truth_cells = {}
    idx = np.nonzero((truth.buy + truth.sell) > 0)
    for i, j, k in zip(*idx):
        truth_cells[(truth.stocks[i], truth.dates[j], int(k) + 1)] = (
            int(truth.buy[i, j, k]),
            int(truth.sell[i, j, k]),
        )
    _panel_from_cells(truth_cells).write_text(out / "truth_panel.csv")
    write_table(
        out / "truth_index_min.csv",
        "truth-index-min",
        ("date", "bar"),
        sorted(truth.index_min_bar.items()),
        config_hash=cfg.config_hash(),
    )
    print(
        f"synth: {files.transactions} ({n_stocks} stocks x {len(dates)} dates, "
        f"seed {cfg.seed}) -> {out}"
    )
    return 0


def _cmd_verify(cfg: RunConfig, n_scenarios: int) -> int:
    out = _out_dir(cfg)
    report = run_oracle_suite(n_scenarios=n_scenarios, seed=cfg.seed)
    write_table(
        out / "verify_report.csv",
        "verify-report",
        ("metric", "value"),
        [
            ("scenarios", report.n_scenarios),
            ("rows", report.n_rows),
            ("failures", len(report.failures)),
            ("seconds", round(report.seconds, 3)),
        ],
        config_hash=cfg.config_hash(),
    )
    for failure in report.failures:
        print(f"FAIL {failure}", file=sys.stderr)
    status = "ok" if report.ok else f"{len(report.failures)} failures"
    print(
        f"verify: {report.n_scenarios} scenarios, {report.n_rows} rows, "
        f"{report.seconds:.1f}s: {status}"
    )
    if not report.ok:
        raise DataError("oracle suite failed; see verify_report.csv and stderr")
    return 0


# -- argument plumbing ------------------------------------------------------------

_COMMANDS = (
    "ingest", "polarity", "ratios", "flips", "runlengths", "fit",
    "market", "kl", "granger", "impact", "emotion", "synth", "verify",
)


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polab",
        description="Trading polarity analytics over tick-level transaction data.",
    )
    parser.add_argument("--version", action="version", version=f"polab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None, help="parallel workers")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key (JSON literals accepted)",
        )
        if name == "granger":
            p.add_argument("--return-mode", choices=("vs-prev-close", "vs-prev-minute"))
        if name == "verify":
            p.add_argument("--scenarios", type=int, default=100)
    return parser


def _resolve_config(args) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config root must be an object: {args.config}")
    for item in args.set:
        key, value = _parse_override(item)
        raw[key] = value
    if args.out is not None:
        raw["out_dir"] = args.out
    if args.threads is not None:
        raw["threads"] = args.threads
    if getattr(args, "return_mode", None):
        raw["return_mode"] = args.return_mode
    return RunConfig.from_dict(raw)


#: input paths each subcommand reads and must find at start
_COMMAND_INPUTS = {
    "ingest": ("transactions",),
    "polarity": (),
    "ratios": ("capitalization",),
    "flips": ("eod_prices",),
    "runlengths": (),
    "fit": (),
    "market": ("eod_prices", "intraday_prices"),
    "kl": ("intraday_prices",),
    "granger": ("eod_prices", "intraday_prices"),
    "impact": ("intraday_prices",),
    "emotion": ("eod_prices", "intraday_prices", "emotion"),
    "synth": (),
    "verify": (),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        cfg.validate_paths(_COMMAND_INPUTS[args.command])
        if args.command == "ingest":
            return _cmd_ingest(cfg)
        if args.command == "polarity":
            return _cmd_polarity(cfg)
        if args.command == "ratios":
            return _cmd_ratios(cfg)
        if args.command == "flips":
            return _cmd_flips(cfg)
        if args.command == "runlengths":
            return _cmd_runlengths(cfg)
        if args.command == "fit":
            return _cmd_fit(cfg)
        if args.command == "market":
            return _cmd_market(cfg)
        if args.command == "kl":
            return _cmd_kl(cfg)
        if args.command == "granger":
            return _cmd_granger(cfg)
        if args.command == "impact":
            return _cmd_impact(cfg)
        if args.command == "emotion":
            return _cmd_emotion(cfg)
        if args.command == "synth":
            return _cmd_synth(cfg)
        if args.command == "verify":
            return _cmd_verify(cfg, args.scenarios)
        raise ConfigError(f"unknown command {args.command!r}")
    except PolabError as exc:
        print(f"error category={exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
