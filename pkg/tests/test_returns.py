import datetime as dt
import math

import numpy as np
import pytest

from polab.errors import DataError
from polab.marketdata.grid import BARS_PER_DAY
from polab.returns import build_return_series

D1 = dt.date(2015, 5, 4)
D2 = dt.date(2015, 5, 5)
D3 = dt.date(2015, 5, 6)


def intraday(values_by_bar):
    arr = np.full(BARS_PER_DAY, np.nan)
    for bar, v in values_by_bar.items():
        arr[bar - 1] = v
    return arr


class TestDailyPct:
    def test_basic_percentage_change(self):
        rs = build_return_series("S", {D1: 10.0, D2: 11.0})
        assert rs.daily_pct[D2] == pytest.approx(0.10)

    def test_first_day_has_no_return(self):
        rs = build_return_series("S", {D1: 10.0, D2: 11.0})
        assert D1 not in rs.daily_pct

    def test_limit_move_flagged_not_rejected(self):
        rs = build_return_series("S", {D1: 20.0, D2: 18.0})
        assert rs.daily_pct[D2] == pytest.approx(-0.10)
        assert D2 in rs.at_limit

    def test_normal_move_not_flagged(self):
        rs = build_return_series("S", {D1: 20.0, D2: 20.6})
        assert D2 not in rs.at_limit

    def test_calendar_gaps_use_prior_trading_day(self):
        rs = build_return_series("S", {D1: 10.0, D3: 12.0})
        assert rs.daily_pct[D3] == pytest.approx(0.20)

    def test_nonpositive_close_is_hard_error(self):
        with pytest.raises(DataError, match="S.*2015-05-05"):
            build_return_series("S", {D1: 10.0, D2: -1.0})


class TestIntradayLog:
    def test_log_return_of_flat_prices_is_zero(self):
        rs = build_return_series("S", {D1: 10.0}, {D2: intraday({5: 10.0, 6: 10.0})})
        assert rs.intraday_log[D2][5] == pytest.approx(0.0)

    def test_log_return_values(self):
        rs = build_return_series("S", {}, {D1: intraday({1: 10.0, 2: 10.5})})
        assert rs.intraday_log[D1][1] == pytest.approx(math.log(10.5) - math.log(10.0))

    def test_missing_neighbor_gives_missing_return(self):
        rs = build_return_series("S", {}, {D1: intraday({1: 10.0, 3: 10.5})})
        logs = rs.intraday_log[D1]
        assert np.isnan(logs[1]) and np.isnan(logs[2])

    def test_first_bar_has_no_previous_minute(self):
        rs = build_return_series("S", {}, {D1: intraday({1: 10.0, 2: 10.5})})
        assert np.isnan(rs.intraday_log[D1][0])

    def test_nonpositive_intraday_price_is_hard_error(self):
        with pytest.raises(DataError, match="bar 7"):
            build_return_series("S", {}, {D1: intraday({7: 0.0})})


class TestIntradayPctVsPrevClose:
    def test_uses_prior_close_as_base(self):
        rs = build_return_series("S", {D1: 10.0, D2: 10.5}, {D2: intraday({1: 10.2})})
        assert rs.intraday_pct_vs_prev_close[D2][0] == pytest.approx(0.02)

    def test_first_day_without_base_is_all_missing(self):
        rs = build_return_series("S", {D1: 10.0}, {D1: intraday({1: 10.2})})
        assert np.all(np.isnan(rs.intraday_pct_vs_prev_close[D1]))

    def test_shape_validation(self):
        with pytest.raises(DataError, match="shape"):
            build_return_series("S", {}, {D1: np.ones(10)})
