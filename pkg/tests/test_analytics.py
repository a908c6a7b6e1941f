"""Analytics operations against hand-computed expectations."""

import math
from decimal import Decimal

import pytest

from conftest import DAY_NS, DAY_RANGE, tick_ts
from tickbench import analytics
from tickbench.analytics import Diagnostics
from tickbench.errors import InvalidArgument, NotFound
from tickbench.model import (
    NS_PER_HOUR,
    NS_PER_MIN,
    NS_PER_SEC,
    BenchmarkSpec,
    BookLevel,
    BookSnapshot,
    ClosingPriceSeries,
    ResultTable,
    ReturnSeries,
    Side,
    TimeBucket,
    TimeRange,
    Trade,
    bucket_of,
)

WIDTH_60S = 60 * NS_PER_SEC


def trade(seconds, side, amount, price="100", symbol="BTC-USD"):
    return Trade(tick_ts(seconds), "EX1", symbol, side,
                 Decimal(price), Decimal(amount))


def book(seconds, bid, ask, symbol="BTC-USD", exchange="EX1", bid_sizes=None, ask_sizes=None):
    bids = tuple(BookLevel(Decimal(p), Decimal(s))
                 for p, s in zip(bid, bid_sizes or ["1"] * len(bid)))
    asks = tuple(BookLevel(Decimal(p), Decimal(s))
                 for p, s in zip(ask, ask_sizes or ["1"] * len(ask)))
    return BookSnapshot(tick_ts(seconds), exchange, symbol, bids, asks)


class TestVolumeByBucket:
    def test_empty_input(self):
        table = analytics.volume_by_bucket([], DAY_RANGE, WIDTH_60S)
        assert table.rows == ()

    def test_two_bucket_grouping(self):
        trades = [
            trade(10, Side.BUY, "1.0"),
            trade(20, Side.BUY, "2.0"),
            trade(70, Side.SELL, "5.0"),
        ]
        table = analytics.volume_by_bucket(trades, DAY_RANGE, WIDTH_60S)
        assert table.rows == (
            (DAY_NS, "BTC-USD", "buy", Decimal("3.0")),
            (DAY_NS + WIDTH_60S, "BTC-USD", "sell", Decimal("5.0")),
        )

    def test_side_filter(self):
        trades = [trade(10, Side.BUY, "1"), trade(11, Side.SELL, "2")]
        table = analytics.volume_by_bucket(trades, DAY_RANGE, WIDTH_60S, side=Side.BUY)
        assert all(row[2] == "buy" for row in table.rows)
        assert len(table.rows) == 1

    def test_rows_sorted_by_bucket_symbol_side(self):
        trades = [
            trade(70, Side.SELL, "1", symbol="ETH-USD"),
            trade(75, Side.BUY, "1", symbol="ETH-USD"),
            trade(71, Side.BUY, "1", symbol="BTC-USD"),
            trade(5, Side.BUY, "1", symbol="ETH-USD"),
        ]
        table = analytics.volume_by_bucket(trades, DAY_RANGE, WIDTH_60S)
        keys = [(r[0], r[1], r[2]) for r in table.rows]
        assert keys == sorted(keys)


class TestVwapByBucket:
    def test_single_trade(self):
        table = analytics.vwap_by_bucket(
            [trade(3, Side.BUY, "3", price="42")], DAY_RANGE, WIDTH_60S, "BTC-USD")
        assert table.rows == ((DAY_NS, 42.0),)

    def test_weighted_mean(self):
        trades = [
            trade(1, Side.BUY, "1", price="10"),
            trade(2, Side.SELL, "3", price="20"),
        ]
        table = analytics.vwap_by_bucket(trades, DAY_RANGE, WIDTH_60S, "BTC-USD")
        # (10*1 + 20*3) / 4
        assert table.rows == ((DAY_NS, 17.5),)

    def test_constant_price(self):
        trades = [trade(i, Side.BUY, str(1 + i), price="77.77") for i in range(1, 200)]
        table = analytics.vwap_by_bucket(trades, DAY_RANGE, WIDTH_60S, "BTC-USD")
        assert all(v == 77.77 for _, v in table.rows)

    def test_wildcard_symbol_rejected(self):
        with pytest.raises(InvalidArgument):
            analytics.vwap_by_bucket([], DAY_RANGE, WIDTH_60S, "*")


class TestTopOfBook:
    def test_reference_ladder(self):
        books = [book(10, ["100", "99"], ["101", "104"])]
        ts, bid, ask = analytics.top_of_book(books, "BTC-USD", tick_ts(20))
        assert (bid, ask) == (Decimal("100"), Decimal("101"))

    def test_boundary_inclusive(self):
        books = [book(10, ["100"], ["101"]), book(20, ["102"], ["103"])]
        ts, bid, ask = analytics.top_of_book(books, "BTC-USD", tick_ts(20))
        assert ts == tick_ts(20)
        assert bid == Decimal("102")

    def test_before_all_snapshots(self):
        books = [book(10, ["100"], ["101"])]
        with pytest.raises(NotFound):
            analytics.top_of_book(books, "BTC-USD", tick_ts(9))

    def test_equal_timestamp_latest_ingest_wins(self):
        books = [book(10, ["100"], ["101"]), book(10, ["99"], ["102"])]
        _, bid, _ = analytics.top_of_book(books, "BTC-USD", tick_ts(10))
        assert bid == Decimal("99")


class TestHighestBid:
    def test_singleton(self):
        assert analytics.highest_bid(
            [book(1, ["100"], ["101"])], "BTC-USD", DAY_RANGE) == Decimal("100")

    def test_max_of_three(self):
        books = [
            book(1, ["99.5"], ["200"]),
            book(2, ["101.25"], ["200"]),
            book(3, ["100"], ["200"]),
        ]
        assert analytics.highest_bid(books, "BTC-USD", DAY_RANGE) == Decimal("101.25")

    def test_order_free(self):
        books = [
            book(1, ["99.5"], ["200"]),
            book(2, ["101.25"], ["200"]),
            book(3, ["100"], ["200"]),
        ]
        assert (analytics.highest_bid(list(reversed(books)), "BTC-USD", DAY_RANGE)
                == Decimal("101.25"))

    def test_empty_not_found(self):
        with pytest.raises(NotFound):
            analytics.highest_bid([], "BTC-USD", DAY_RANGE)


class TestSpreadSeries:
    def test_unit_spread(self):
        table = analytics.spread_series([book(1, ["100"], ["101"])], "BTC-USD", DAY_RANGE)
        assert table.rows == ((tick_ts(1), Decimal("1")),)

    def test_row_per_snapshot(self):
        books = [book(i, ["100"], ["101"]) for i in (1, 2, 3)]
        table = analytics.spread_series(books, "BTC-USD", DAY_RANGE)
        assert table.n_rows == 3

    def test_one_sided_skipped_and_counted(self):
        books = [
            book(1, ["100"], ["101"]),
            BookSnapshot(tick_ts(2), "EX1", "BTC-USD",
                         (BookLevel(Decimal(100), Decimal(1)),), ()),
        ]
        diag = Diagnostics()
        table = analytics.spread_series(books, "BTC-USD", DAY_RANGE, diagnostics=diag)
        assert table.n_rows == 1
        assert diag.skipped_rows == 1


class TestMarketDepth:
    def test_level_one_is_top_size(self):
        books = [book(1, ["100"], ["101"], bid_sizes=["7.5"])]
        series = analytics.market_depth_series(
            books, "BTC-USD", Side.BUY, 1, DAY_RANGE, WIDTH_60S)
        assert series.entries[0][1] == 7.5

    def test_cumulative_sum(self):
        books = [book(1, ["100", "99", "98"], ["101"], bid_sizes=["5", "10", "15"])]
        series = analytics.market_depth_series(
            books, "BTC-USD", Side.BUY, 3, DAY_RANGE, WIDTH_60S)
        assert series.entries[0][1] == 30.0

    def test_missing_levels_contribute_zero(self):
        books = [book(1, ["100", "99"], ["101"], bid_sizes=["5", "10"])]
        series = analytics.market_depth_series(
            books, "BTC-USD", Side.BUY, 5, DAY_RANGE, WIDTH_60S)
        assert series.entries[0][1] == 15.0

    def test_level_bounds(self):
        with pytest.raises(InvalidArgument):
            analytics.market_depth_series([], "BTC-USD", Side.BUY, 0, DAY_RANGE, WIDTH_60S)
        with pytest.raises(InvalidArgument):
            analytics.market_depth_series([], "BTC-USD", Side.BUY, 21, DAY_RANGE, WIDTH_60S)

    def test_monotone_in_level(self):
        books = [book(1, ["100", "99", "98"], ["101"], bid_sizes=["5", "10", "15"])]
        depths = [
            analytics.market_depth_series(
                books, "BTC-USD", Side.BUY, n, DAY_RANGE, WIDTH_60S).entries[0][1]
            for n in range(1, 6)
        ]
        assert depths == sorted(depths)


class TestNbbo:
    def test_single_exchange_degenerate(self):
        books = [book(1, ["100"], ["101"])]
        quotes = analytics.nbbo_series(books, "BTC-USD", DAY_RANGE, WIDTH_60S)
        assert len(quotes) == 1
        assert (quotes[0].best_bid, quotes[0].best_ask) == (Decimal("100"), Decimal("101"))

    def test_cross_exchange_consolidation(self):
        books = [
            book(1, ["100"], ["101"], exchange="EX1"),
            book(2, ["100.5"], ["101.5"], exchange="EX2"),
        ]
        quotes = analytics.nbbo_series(books, "BTC-USD", DAY_RANGE, WIDTH_60S)
        q = quotes[0]
        assert q.best_bid == Decimal("100.5") and q.bid_exchange == "EX2"
        assert q.best_ask == Decimal("101") and q.ask_exchange == "EX1"

    def test_tie_breaks_to_smaller_exchange_id(self):
        books = [
            book(1, ["100"], ["101"], exchange="EXB"),
            book(2, ["100"], ["101"], exchange="EXA"),
        ]
        quotes = analytics.nbbo_series(books, "BTC-USD", DAY_RANGE, WIDTH_60S)
        assert quotes[0].bid_exchange == "EXA"
        assert quotes[0].ask_exchange == "EXA"

    def test_latest_snapshot_per_exchange_wins(self):
        books = [
            book(1, ["105"], ["106"], exchange="EX1"),
            book(30, ["100"], ["101"], exchange="EX1"),
        ]
        quotes = analytics.nbbo_series(books, "BTC-USD", DAY_RANGE, WIDTH_60S)
        assert quotes[0].best_bid == Decimal("100")

    def test_one_sided_bucket_skipped_with_diagnostics(self):
        books = [
            BookSnapshot(tick_ts(1), "EX1", "BTC-USD",
                         (BookLevel(Decimal(100), Decimal(1)),), ()),
            book(61, ["100"], ["101"]),
        ]
        diag = Diagnostics()
        quotes = analytics.nbbo_series(books, "BTC-USD", DAY_RANGE, WIDTH_60S,
                                       diagnostics=diag)
        assert len(quotes) == 1
        assert diag.skipped_rows == 1


class TestClosingPrices:
    def test_one_point_per_bucket_identity(self):
        points = [(tick_ts(1), Decimal("10")), (tick_ts(61), Decimal("12"))]
        closes = analytics.closing_prices(points, DAY_RANGE, WIDTH_60S)
        assert [float(p) for _, p in closes.entries] == [10.0, 12.0]

    def test_last_in_bucket(self):
        points = [
            (tick_ts(1), Decimal("10")),
            (tick_ts(59), Decimal("11")),
            (tick_ts(61), Decimal("12")),
        ]
        closes = analytics.closing_prices(points, DAY_RANGE, WIDTH_60S)
        assert [(b.start, p) for b, p in closes.entries] == [
            (DAY_NS, Decimal("11")),
            (DAY_NS + WIDTH_60S, Decimal("12")),
        ]

    def test_empty(self):
        closes = analytics.closing_prices([], DAY_RANGE, WIDTH_60S)
        assert closes.entries == ()

    def test_tie_latest_input_order(self):
        points = [(tick_ts(5), Decimal("10")), (tick_ts(5), Decimal("20"))]
        closes = analytics.closing_prices(points, DAY_RANGE, WIDTH_60S)
        assert closes.entries[0][1] == Decimal("20")


class TestLogReturns:
    def _series(self, prices):
        entries = tuple(
            (TimeBucket(DAY_NS + i * WIDTH_60S, WIDTH_60S), Decimal(p))
            for i, p in enumerate(prices))
        return ClosingPriceSeries(entries)

    def test_constant_closes(self):
        returns = analytics.log_returns(self._series(["5", "5", "5"]))
        assert [v for _, v in returns.entries] == [0.0, 0.0]

    def test_e_powers(self):
        closes = self._series([str(math.exp(0)), repr(math.e), repr(math.e ** 2)])
        returns = analytics.log_returns(closes)
        assert [round(v, 12) for _, v in returns.entries] == [1.0, 1.0]

    def test_single_close(self):
        returns = analytics.log_returns(self._series(["5"]))
        assert returns.entries == ()

    def test_carries_later_bucket(self):
        returns = analytics.log_returns(self._series(["5", "6"]))
        assert returns.entries[0][0].start == DAY_NS + WIDTH_60S


class TestMidQuote:
    def test_arithmetic(self):
        mids = analytics.mid_quote_points([book(1, ["100"], ["101"])], "BTC-USD", DAY_RANGE)
        assert mids == [(tick_ts(1), Decimal("100.5"))]

    def test_three_points_in_order(self):
        books = [book(3, ["100"], ["101"]), book(1, ["90"], ["91"]), book(2, ["95"], ["96"])]
        mids = analytics.mid_quote_points(books, "BTC-USD", DAY_RANGE)
        assert [ts for ts, _ in mids] == sorted(ts for ts, _ in mids)


class TestVolatility:
    def _returns(self, values, width=WIDTH_60S):
        entries = tuple(
            (TimeBucket(DAY_NS + i * width, width), v) for i, v in enumerate(values))
        return ReturnSeries(entries)

    def test_equal_returns_zero_volatility(self):
        table = analytics.volatility(self._returns([0.02, 0.02, 0.02]), NS_PER_HOUR)
        assert all(v == 0.0 for _, v in table.rows)

    def test_hand_computed_sample_std(self):
        table = analytics.volatility(self._returns([0.01, 0.03]), NS_PER_HOUR)
        assert table.n_rows == 1
        assert table.rows[0][1] == pytest.approx(math.sqrt(0.0002), rel=1e-12)

    def test_single_return_window_emits_zero(self):
        table = analytics.volatility(self._returns([0.05]), NS_PER_HOUR)
        assert table.rows == ((DAY_NS, 0.0),)

    def test_window_narrower_than_bucket_rejected(self):
        with pytest.raises(InvalidArgument):
            analytics.volatility(self._returns([0.0, 0.1], width=NS_PER_HOUR), NS_PER_MIN)


class TestRunBenchmark:
    def test_tv1_empty_day(self):
        spec = BenchmarkSpec("T-V1", DAY_RANGE, inner_width=NS_PER_MIN)
        table = analytics.run_benchmark(spec, [], [])
        assert table.rows == ()

    def test_ot_seeded_determinism(self):
        books = [book(i, ["100"], ["101"]) for i in range(0, 600, 7)]
        spec = BenchmarkSpec("O-T", DAY_RANGE, "BTC-USD", rng_seed=42)
        t1 = analytics.run_benchmark(spec, [], books)
        t2 = analytics.run_benchmark(spec, [], books)
        assert t1.digest() == t2.digest()
        at = analytics.seeded_instant(spec)
        assert at in spec.range

    def test_cvo1_equals_manual_composition(self):
        books = [
            book(60 * i + (i % 7), [str(100 + (i * 13) % 11)], [str(112 + (i * 7) % 5)])
            for i in range(240)
        ]
        spec = BenchmarkSpec("C-VO1", DAY_RANGE, "BTC-USD",
                             inner_width=5 * NS_PER_MIN, outer_width=NS_PER_HOUR)
        table = analytics.run_benchmark(spec, [], books)

        mids = analytics.mid_quote_points(books, "BTC-USD", DAY_RANGE)
        closes = analytics.closing_prices(mids, DAY_RANGE, 5 * NS_PER_MIN)
        returns = analytics.log_returns(closes)
        manual = analytics.volatility(returns, NS_PER_HOUR)
        assert table.column_names == ("window_start", "volatility")
        assert [r[0] for r in table.rows] == [r[0] for r in manual.rows]
        for (_, got), (_, want) in zip(table.rows, manual.rows):
            assert got == pytest.approx(want, rel=1e-12, abs=1e-15)

    def test_population_estimator_differs(self):
        books = [
            book(60 * i, [str(100 + (i * 13) % 11)], [str(112 + (i * 7) % 5)])
            for i in range(240)
        ]
        spec = BenchmarkSpec("C-VO1", DAY_RANGE, "BTC-USD",
                             inner_width=5 * NS_PER_MIN, outer_width=NS_PER_HOUR)
        sample = analytics.run_benchmark(spec, [], books)
        population = analytics.run_benchmark(
            spec, [], books, volatility_estimator="population")
        assert sample.digest() != population.digest()

    def test_write_benchmarks_rejected(self):
        with pytest.raises(InvalidArgument):
            analytics.run_benchmark(
                BenchmarkSpec("O-S", DAY_RANGE, "BTC-USD"), [], [],
                volatility_estimator="median")
        with pytest.raises(InvalidArgument):
            analytics.run_benchmark(BenchmarkSpec("W", DAY_RANGE), [], [])


def test_result_table_column_contracts():
    spec = BenchmarkSpec("C-R", DAY_RANGE, "BTC-USD", inner_width=5 * NS_PER_MIN)
    books = [book(i * 30, ["100"], ["101"]) for i in range(0, 100)]
    table = analytics.run_benchmark(spec, [], books)
    assert table.column_names == ("bucket_start", "log_return")
    assert isinstance(table, ResultTable)
