"""Tick-level trading polarity analytics.

Builds per-stock, per-minute buy/sell man-times polarity from raw
exchange transaction records and derives its behavioral statistics:
direction ratios, sign-flip counts and depth, run-length tail fits,
burstiness, market-level aggregates, and polarity-return coupling.
"""

__version__ = "0.1.0"

from .config import Periods, RunConfig
from .errors import ConfigError, DataError, FitRefusedError, InputError, NumericError, PolabError
from .flips import (
    DailyFlipSummary,
    FlipSeries,
    RunLengthSample,
    build_flip_series,
    flip_stats,
    run_lengths,
)
from .panel import (
    DirectionRatios,
    PanelBuilder,
    PolarityPanel,
    count_mantimes,
    daily_polarity_at_index_min,
    direction_ratios,
    market_polarity,
    market_polarity_series,
    polarity,
)
from .returns import ReturnSeries, build_return_series
from .tailfit import BurstinessResult, PowerLawFit, burstiness, fit_power_law
from .coupling import (
    CorrDist,
    FiveNumberSummary,
    GrangerDayResult,
    GrangerSummary,
    build_corr_dist,
    emotion_correlation,
    granger_day,
    granger_pass_rates,
    kl_divergence,
    market_correlation,
    pearson,
    price_impact_groups,
    stock_day_correlation,
)
from .synth import (
    GroundTruth,
    RegimeSpec,
    ScenarioFiles,
    brute_force_recount,
    generate,
    generate_causal_days,
    sample_discrete_power_law,
)
from .verify import OracleReport, run_oracle_suite

__all__ = [
    "__version__",
    "Periods",
    "RunConfig",
    "PolabError",
    "ConfigError",
    "InputError",
    "DataError",
    "NumericError",
    "FitRefusedError",
    "FlipSeries",
    "DailyFlipSummary",
    "RunLengthSample",
    "build_flip_series",
    "flip_stats",
    "run_lengths",
    "PolarityPanel",
    "PanelBuilder",
    "DirectionRatios",
    "count_mantimes",
    "polarity",
    "direction_ratios",
    "market_polarity",
    "market_polarity_series",
    "daily_polarity_at_index_min",
    "ReturnSeries",
    "build_return_series",
    "PowerLawFit",
    "BurstinessResult",
    "fit_power_law",
    "burstiness",
    "CorrDist",
    "FiveNumberSummary",
    "GrangerDayResult",
    "GrangerSummary",
    "build_corr_dist",
    "kl_divergence",
    "market_correlation",
    "pearson",
    "price_impact_groups",
    "stock_day_correlation",
    "granger_day",
    "granger_pass_rates",
    "emotion_correlation",
    "GroundTruth",
    "RegimeSpec",
    "ScenarioFiles",
    "generate",
    "generate_causal_days",
    "brute_force_recount",
    "sample_discrete_power_law",
    "OracleReport",
    "run_oracle_suite",
]
