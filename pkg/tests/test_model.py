"""Model type invariants and bucket arithmetic."""

from datetime import date
from decimal import Decimal

import pytest

from tickbench.errors import InvalidArgument, InvalidData
from tickbench.fp import fp_from_decimal, fp_from_str, fp_to_decimal, fp_to_str
from tickbench.model import (
    NS_PER_DAY,
    NS_PER_HOUR,
    NS_PER_MIN,
    BenchmarkSpec,
    BookLevel,
    BookSnapshot,
    ResultTable,
    Side,
    TimeBucket,
    TimeRange,
    Trade,
    bucket_of,
    default_specs,
    ns_of_day,
)


class TestBucketOf:
    def test_epoch_boundary(self):
        assert bucket_of(0, 60 * 10**9).start == 0

    def test_just_past_boundary(self):
        # floor(61/60) = 1
        assert bucket_of(61 * 10**9, 60 * 10**9).start == 60 * 10**9

    def test_one_ns_before_boundary(self):
        assert bucket_of(119_999_999_999, 60 * 10**9).start == 60 * 10**9

    def test_zero_width_rejected(self):
        with pytest.raises(InvalidArgument):
            bucket_of(5, 0)

    def test_idempotent_on_starts(self):
        b = bucket_of(98_765_432_100, 7_000)
        assert bucket_of(b.start, b.width).start == b.start

    def test_partition_property(self):
        for ts in (0, 1, 59_999_999_999, 60_000_000_000, 123_456_789_012_345):
            for width in (1, 7, 60 * 10**9):
                b = bucket_of(ts, width)
                assert b.start <= ts < b.start + width
                assert b.start % width == 0


class TestSide:
    def test_exactly_two_values(self):
        assert {s.value for s in Side} == {"buy", "sell"}

    def test_parse_rejects_unknown(self):
        with pytest.raises(InvalidData):
            Side.parse("BUY")


class TestTrade:
    def test_positive_fields_enforced(self):
        with pytest.raises(InvalidData):
            Trade(1, "EX1", "BTC-USD", Side.BUY, Decimal("-1"), Decimal("1"))
        with pytest.raises(InvalidData):
            Trade(1, "EX1", "BTC-USD", Side.BUY, Decimal("1"), Decimal("0"))
        with pytest.raises(InvalidData):
            Trade(0, "EX1", "BTC-USD", Side.BUY, Decimal("1"), Decimal("1"))


class TestBookSnapshot:
    def test_sorted_sides_enforced(self):
        with pytest.raises(InvalidData):
            BookSnapshot(1, "EX1", "BTC-USD",
                         bids=(BookLevel(Decimal(100), Decimal(1)),
                               BookLevel(Decimal(101), Decimal(1))),
                         asks=())
        with pytest.raises(InvalidData):
            BookSnapshot(1, "EX1", "BTC-USD",
                         bids=(),
                         asks=(BookLevel(Decimal(101), Decimal(1)),
                               BookLevel(Decimal(100), Decimal(1))))

    def test_crossed_book_rejected(self):
        with pytest.raises(InvalidData):
            BookSnapshot(1, "EX1", "BTC-USD",
                         bids=(BookLevel(Decimal(101), Decimal(1)),),
                         asks=(BookLevel(Decimal(100), Decimal(1)),))

    def test_level_cap(self):
        levels = tuple(BookLevel(Decimal(100 - i), Decimal(1)) for i in range(21))
        with pytest.raises(InvalidData):
            BookSnapshot(1, "EX1", "BTC-USD", bids=levels, asks=())

    def test_one_sided_allowed(self):
        snap = BookSnapshot(1, "EX1", "BTC-USD",
                            bids=(BookLevel(Decimal(100), Decimal(1)),), asks=())
        assert snap.asks == ()


class TestTimeRange:
    def test_empty_rejected(self):
        with pytest.raises(InvalidArgument):
            TimeRange(5, 5)

    def test_contains_half_open(self):
        r = TimeRange(10, 20)
        assert 10 in r and 19 in r and 20 not in r and 9 not in r


class TestBenchmarkSpec:
    def test_depth_level_only_for_depth_benchmarks(self):
        r = TimeRange(0, NS_PER_DAY)
        with pytest.raises(InvalidArgument):
            BenchmarkSpec("T-V1", r, inner_width=NS_PER_MIN, depth_level=3)
        spec = BenchmarkSpec("O-V1", r, "BTC-USD", inner_width=NS_PER_MIN,
                             depth_level=1, side=Side.BUY)
        assert spec.depth_level == 1

    def test_rng_seed_only_for_random_instant(self):
        r = TimeRange(0, NS_PER_DAY)
        with pytest.raises(InvalidArgument):
            BenchmarkSpec("O-B1", r, "BTC-USD", rng_seed=7)
        with pytest.raises(InvalidArgument):
            BenchmarkSpec("O-T", r, "BTC-USD")

    def test_unknown_id(self):
        with pytest.raises(InvalidArgument):
            BenchmarkSpec("X-1", TimeRange(0, 1))

    def test_intensities_match_table(self):
        r = TimeRange(0, 40 * NS_PER_DAY)
        spec = BenchmarkSpec("O-V2", r, "BTC-USD", inner_width=NS_PER_HOUR,
                             depth_level=5, side=Side.BUY)
        assert (spec.io_intensity, spec.compute_intensity) == ("heavy", "heavy")
        spec = BenchmarkSpec("O-S", TimeRange(0, NS_PER_DAY), "BTC-USD")
        assert (spec.io_intensity, spec.compute_intensity) == ("light", "heavy")


class TestDefaultSpecs:
    def test_fourteen_read_benchmarks(self):
        specs = default_specs(date(2022, 6, 18))
        assert len(specs) == 14
        assert set(specs) == {
            "T-V1", "T-V2", "T-VWAP", "O-T", "O-B1", "O-B2", "O-S",
            "O-V1", "O-V2", "O-NBBO", "C-R", "C-VT", "C-VO1", "C-VO2"}

    def test_calendar_month_range(self):
        # 2022-06-18 inclusive through 2022-07-18 exclusive
        specs = default_specs(date(2022, 6, 18))
        month = specs["T-V2"].range
        assert month.begin == ns_of_day(date(2022, 6, 18))
        assert month.end == ns_of_day(date(2022, 7, 18))

    def test_week_and_day_ranges(self):
        specs = default_specs(date(2022, 6, 18))
        assert specs["O-B1"].range.end - specs["O-B1"].range.begin == 7 * NS_PER_DAY
        assert specs["O-S"].range.end - specs["O-S"].range.begin == NS_PER_DAY

    def test_hourly_tv2_variant_selectable(self):
        specs = default_specs(date(2022, 6, 18), tv2_inner_width=NS_PER_HOUR)
        assert specs["T-V2"].inner_width == NS_PER_HOUR


class TestResultTable:
    def test_arity_enforced(self):
        with pytest.raises(InvalidData):
            ResultTable(("a", "b"), ((1,),))

    def test_digest_stable_and_order_sensitive(self):
        t1 = ResultTable(("a",), ((1,), (2,)))
        t2 = ResultTable(("a",), ((1,), (2,)))
        t3 = ResultTable(("a",), ((2,), (1,)))
        assert t1.digest() == t2.digest()
        assert t1.digest() != t3.digest()

    def test_digest_distinguishes_types_not_decimal_scale(self):
        assert (ResultTable(("a",), ((Decimal("3.10"),),)).digest()
                == ResultTable(("a",), ((Decimal("3.1"),),)).digest())
        assert (ResultTable(("a",), ((1,),)).digest()
                != ResultTable(("a",), ((1.0,),)).digest())


class TestFixedPoint:
    def test_round_trip(self):
        for text in ("0.00000001", "45012.34", "1", "0.5", "99999999.99999999"):
            units = fp_from_str(text)
            assert fp_to_str(units) == text
            assert fp_from_decimal(fp_to_decimal(units)) == units

    def test_too_many_digits_rejected(self):
        with pytest.raises(InvalidData):
            fp_from_str("1.000000001")

    def test_exponent_rejected(self):
        with pytest.raises(InvalidData):
            fp_from_str("1e5")
