"""Core domain types: trades, order-book snapshots, time buckets and benchmark specs.

All timestamps are integer nanoseconds since the Unix epoch, UTC. Buckets are
epoch-aligned half-open intervals [start, start + width). Prices and amounts
are exact decimals with at most 8 fractional digits.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from decimal import Decimal

from .errors import InvalidArgument, InvalidData
from .fp import decimal_to_canonical_str

NS_PER_SEC = 1_000_000_000
NS_PER_MIN = 60 * NS_PER_SEC
NS_PER_HOUR = 3600 * NS_PER_SEC
NS_PER_DAY = 86_400 * NS_PER_SEC

MAX_BOOK_LEVELS = 20


class Side(enum.Enum):
    """Trade / order side; serialized lowercase."""

    BUY = "buy"
    SELL = "sell"

    @classmethod
    def parse(cls, text: str) -> "Side":
        if text == "buy":
            return cls.BUY
        if text == "sell":
            return cls.SELL
        raise InvalidData(f"unknown side: {text!r}")


def ns_of_day(day: date) -> int:
    """Nanoseconds at 00:00:00 UTC of the given calendar day."""
    dt = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
    return int(dt.timestamp()) * NS_PER_SEC


def day_of_ns(ts: int) -> date:
    return datetime.fromtimestamp(ts // NS_PER_SEC, tz=timezone.utc).date()


@dataclass(frozen=True)
class Trade:
    """One executed transaction."""

    timestamp: int
    exchange: str
    symbol: str
    side: Side
    price: Decimal
    amount: Decimal

    def __post_init__(self):
        if self.timestamp <= 0:
            raise InvalidData(f"trade timestamp must be > 0, got {self.timestamp}")
        if self.price <= 0:
            raise InvalidData(f"trade price must be > 0, got {self.price}")
        if self.amount <= 0:
            raise InvalidData(f"trade amount must be > 0, got {self.amount}")


@dataclass(frozen=True)
class BookLevel:
    """One present price level; absent levels are simply not stored."""

    price: Decimal
    size: Decimal

    def __post_init__(self):
        if self.price <= 0 or self.size <= 0:
            raise InvalidData(f"book level must be strictly positive: {self.price}@{self.size}")


@dataclass(frozen=True)
class BookSnapshot:
    """A 20-level bid/ask ladder for one symbol and exchange at one instant.

    Levels are stored densely from level 1, so gaps are unrepresentable.
    Bid prices strictly decrease, ask prices strictly increase, and the top
    of book never crosses.
    """

    timestamp: int
    exchange: str
    symbol: str
    bids: tuple[BookLevel, ...]
    asks: tuple[BookLevel, ...]

    def __post_init__(self):
        if self.timestamp <= 0:
            raise InvalidData(f"snapshot timestamp must be > 0, got {self.timestamp}")
        for side_name, levels in (("bids", self.bids), ("asks", self.asks)):
            if len(levels) > MAX_BOOK_LEVELS:
                raise InvalidData(f"{side_name}: more than {MAX_BOOK_LEVELS} levels")
        for i in range(1, len(self.bids)):
            if self.bids[i].price >= self.bids[i - 1].price:
                raise InvalidData("bid prices must strictly decrease from level 1")
        for i in range(1, len(self.asks)):
            if self.asks[i].price <= self.asks[i - 1].price:
                raise InvalidData("ask prices must strictly increase from level 1")
        if self.bids and self.asks and self.bids[0].price >= self.asks[0].price:
            raise InvalidData(
                f"crossed book: bid {self.bids[0].price} >= ask {self.asks[0].price}"
            )


@dataclass(frozen=True)
class TimeBucket:
    """Epoch-aligned half-open interval [start, start + width)."""

    start: int
    width: int

    def __post_init__(self):
        if self.width <= 0:
            raise InvalidArgument(f"bucket width must be > 0, got {self.width}")
        if self.start % self.width != 0:
            raise InvalidArgument(f"bucket start {self.start} not aligned to width {self.width}")

    @property
    def end(self) -> int:
        return self.start + self.width

    def __contains__(self, ts: int) -> bool:
        return self.start <= ts < self.end


def bucket_of(ts: int, width: int) -> TimeBucket:
    """The unique epoch-aligned bucket of the given width containing ts."""
    if width <= 0:
        raise InvalidArgument(f"bucket width must be > 0, got {width}")
    return TimeBucket(start=(ts // width) * width, width=width)


@dataclass(frozen=True)
class TimeRange:
    """Half-open timestamp range [begin, end)."""

    begin: int
    end: int

    def __post_init__(self):
        if self.begin >= self.end:
            raise InvalidArgument(f"empty range: begin {self.begin} >= end {self.end}")

    def __contains__(self, ts: int) -> bool:
        return self.begin <= ts < self.end

    @classmethod
    def for_days(cls, first_day: date, n_days: int = 1) -> "TimeRange":
        begin = ns_of_day(first_day)
        return cls(begin, begin + n_days * NS_PER_DAY)


@dataclass(frozen=True)
class ClosingPriceSeries:
    """Last price per non-empty bucket, in bucket order."""

    entries: tuple[tuple[TimeBucket, Decimal], ...]

    def __post_init__(self):
        for i in range(1, len(self.entries)):
            if self.entries[i][0].start <= self.entries[i - 1][0].start:
                raise InvalidData("closing price buckets must strictly increase")


@dataclass(frozen=True)
class ReturnSeries:
    """Per-bucket log returns; one fewer entry than the close series it came from.

    Values are binary floats: logarithms leave exact decimal arithmetic.
    """

    entries: tuple[tuple[TimeBucket, float], ...]

    def __post_init__(self):
        for i in range(1, len(self.entries)):
            if self.entries[i][0].start <= self.entries[i - 1][0].start:
                raise InvalidData("return buckets must strictly increase")


class Category(enum.Enum):
    TRADES = "Trades"
    ORDER_BOOK = "OrderBook"
    COMPLEX_QUERY = "ComplexQuery"
    WRITING = "Writing"
    STORAGE_EFFICIENCY = "StorageEfficiency"


@dataclass(frozen=True)
class BenchmarkProfile:
    """Static classification of one benchmark id."""

    category: Category
    io_intensity: str
    compute_intensity: str
    description: str
    uses_trades: bool = False
    uses_books: bool = False
    needs_depth_level: bool = False
    needs_rng_seed: bool = False
    needs_side: bool = False
    needs_inner_width: bool = False
    needs_outer_width: bool = False


# Table order is the canonical listing/report order.
BENCHMARK_PROFILES: dict[str, BenchmarkProfile] = {
    "T-V1": BenchmarkProfile(
        Category.TRADES, "light", "light",
        "Trading volume per 1-minute interval over a day, grouped by symbol and side",
        uses_trades=True, needs_inner_width=True),
    "T-V2": BenchmarkProfile(
        Category.TRADES, "heavy", "light",
        "Daily trading volume over a month, grouped by symbol and side",
        uses_trades=True, needs_inner_width=True),
    "T-VWAP": BenchmarkProfile(
        Category.TRADES, "light", "heavy",
        "Volume-weighted average price per 1-minute interval over a day",
        uses_trades=True, needs_inner_width=True),
    "O-T": BenchmarkProfile(
        Category.ORDER_BOOK, "light", "light",
        "Top of the book (best bid and ask) at a seeded random instant",
        uses_books=True, needs_rng_seed=True),
    "O-B1": BenchmarkProfile(
        Category.ORDER_BOOK, "light", "light",
        "Highest bid price over a week",
        uses_books=True),
    "O-B2": BenchmarkProfile(
        Category.ORDER_BOOK, "heavy", "light",
        "Highest bid price over a month",
        uses_books=True),
    "O-S": BenchmarkProfile(
        Category.ORDER_BOOK, "light", "heavy",
        "Bid/ask spread per book update over a day",
        uses_books=True),
    "O-V1": BenchmarkProfile(
        Category.ORDER_BOOK, "light", "heavy",
        "Market depth at level 1, averaged per 1-minute interval over a week",
        uses_books=True, needs_depth_level=True, needs_side=True, needs_inner_width=True),
    "O-V2": BenchmarkProfile(
        Category.ORDER_BOOK, "heavy", "heavy",
        "Market depth at level 5, averaged per 1-hour interval over a month",
        uses_books=True, needs_depth_level=True, needs_side=True, needs_inner_width=True),
    "O-NBBO": BenchmarkProfile(
        Category.ORDER_BOOK, "light", "light",
        "Best bid and offer consolidated across exchanges, per minute over a day",
        uses_books=True, needs_inner_width=True),
    "C-R": BenchmarkProfile(
        Category.COMPLEX_QUERY, "light", "light",
        "Mid-quote log returns per 5-minute interval over a day",
        uses_books=True, needs_inner_width=True),
    "C-VT": BenchmarkProfile(
        Category.COMPLEX_QUERY, "light", "heavy",
        "Hourly volatility of 5-minute execution-price returns over a day",
        uses_trades=True, needs_inner_width=True, needs_outer_width=True),
    "C-VO1": BenchmarkProfile(
        Category.COMPLEX_QUERY, "light", "heavy",
        "Hourly volatility of 5-minute mid-quote returns over a day",
        uses_books=True, needs_inner_width=True, needs_outer_width=True),
    "C-VO2": BenchmarkProfile(
        Category.COMPLEX_QUERY, "light", "heavy",
        "4-hourly volatility of 1-hour mid-quote returns over a week",
        uses_books=True, needs_inner_width=True, needs_outer_width=True),
    "W": BenchmarkProfile(
        Category.WRITING, "heavy write", "light",
        "Write one day of trades and order book data to persistent storage"),
    "SE": BenchmarkProfile(
        Category.STORAGE_EFFICIENCY, "-", "-",
        "On-disk database size as a percentage of the raw source files"),
}

BENCHMARK_IDS = tuple(BENCHMARK_PROFILES)
READ_BENCHMARK_IDS = tuple(b for b in BENCHMARK_IDS if b not in ("W", "SE"))


@dataclass(frozen=True)
class BenchmarkSpec:
    """Fully parameterized description of one benchmark invocation."""

    id: str
    range: TimeRange
    symbol: str = "*"
    inner_width: int | None = None
    outer_width: int | None = None
    side: Side | None = None
    depth_level: int | None = None
    rng_seed: int | None = None

    def __post_init__(self):
        if self.id not in BENCHMARK_PROFILES:
            raise InvalidArgument(
                f"unknown benchmark id {self.id!r}; valid ids: {', '.join(BENCHMARK_IDS)}")
        profile = self.profile
        if profile.needs_depth_level:
            if self.depth_level is None or not (1 <= self.depth_level <= MAX_BOOK_LEVELS):
                raise InvalidArgument(f"{self.id} requires depth_level in 1..{MAX_BOOK_LEVELS}")
        elif self.depth_level is not None:
            raise InvalidArgument(f"depth_level is not applicable to {self.id}")
        if profile.needs_rng_seed and self.rng_seed is None:
            raise InvalidArgument(f"{self.id} requires rng_seed")
        if not profile.needs_rng_seed and self.rng_seed is not None:
            raise InvalidArgument(f"rng_seed is not applicable to {self.id}")
        if profile.needs_inner_width and (self.inner_width is None or self.inner_width <= 0):
            raise InvalidArgument(f"{self.id} requires a positive inner_width")
        if profile.needs_outer_width and (self.outer_width is None or self.outer_width <= 0):
            raise InvalidArgument(f"{self.id} requires a positive outer_width")

    @property
    def profile(self) -> BenchmarkProfile:
        return BENCHMARK_PROFILES[self.id]

    @property
    def category(self) -> Category:
        return self.profile.category

    @property
    def io_intensity(self) -> str:
        return self.profile.io_intensity

    @property
    def compute_intensity(self) -> str:
        return self.profile.compute_intensity


def _same_day_next_month(day: date) -> date:
    """Calendar-month step, clamping day-of-month to the target month's length."""
    year, month = (day.year + 1, 1) if day.month == 12 else (day.year, day.month + 1)
    for dom in range(day.day, 27, -1):
        try:
            return date(year, month, dom)
        except ValueError:
            continue
    return date(year, month, min(day.day, 28))


def default_specs(
    anchor_day: date,
    symbol: str = "BTC-USD",
    rng_seed: int = 1,
    tv2_inner_width: int = NS_PER_DAY,
) -> dict[str, BenchmarkSpec]:
    """Read-benchmark parameterization anchored at the first day of a dataset.

    Day benchmarks span [anchor, +1d), week benchmarks [anchor, +7d) and
    month benchmarks the literal calendar month [anchor, anchor + 1 month).
    T-V2's bucket defaults to 1 day; pass tv2_inner_width=NS_PER_HOUR for the
    hourly variant.
    """
    day = TimeRange.for_days(anchor_day, 1)
    week = TimeRange.for_days(anchor_day, 7)
    month = TimeRange(ns_of_day(anchor_day), ns_of_day(_same_day_next_month(anchor_day)))
    return {
        "T-V1": BenchmarkSpec("T-V1", day, "*", inner_width=NS_PER_MIN),
        "T-V2": BenchmarkSpec("T-V2", month, "*", inner_width=tv2_inner_width),
        "T-VWAP": BenchmarkSpec("T-VWAP", day, symbol, inner_width=NS_PER_MIN),
        "O-T": BenchmarkSpec("O-T", month, symbol, rng_seed=rng_seed),
        "O-B1": BenchmarkSpec("O-B1", week, symbol),
        "O-B2": BenchmarkSpec("O-B2", month, symbol),
        "O-S": BenchmarkSpec("O-S", day, symbol),
        "O-V1": BenchmarkSpec("O-V1", week, symbol, inner_width=NS_PER_MIN,
                              depth_level=1, side=Side.BUY),
        "O-V2": BenchmarkSpec("O-V2", month, symbol, inner_width=NS_PER_HOUR,
                              depth_level=5, side=Side.BUY),
        "O-NBBO": BenchmarkSpec("O-NBBO", day, symbol, inner_width=NS_PER_MIN),
        "C-R": BenchmarkSpec("C-R", day, symbol, inner_width=5 * NS_PER_MIN),
        "C-VT": BenchmarkSpec("C-VT", day, symbol, inner_width=5 * NS_PER_MIN,
                              outer_width=NS_PER_HOUR),
        "C-VO1": BenchmarkSpec("C-VO1", day, symbol, inner_width=5 * NS_PER_MIN,
                               outer_width=NS_PER_HOUR),
        "C-VO2": BenchmarkSpec("C-VO2", week, symbol, inner_width=NS_PER_HOUR,
                               outer_width=4 * NS_PER_HOUR),
    }


@dataclass(frozen=True)
class ResultTable:
    """Normalized, ordered tabular query result.

    Cell values are int nanosecond timestamps, strings, exact Decimals or
    binary floats. Row order is part of the value; canonical ordering is
    applied by the backends layer.
    """

    column_names: tuple[str, ...]
    rows: tuple[tuple, ...] = field(default=())

    def __post_init__(self):
        width = len(self.column_names)
        for row in self.rows:
            if len(row) != width:
                raise InvalidData(
                    f"row arity {len(row)} does not match {width} columns")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def digest(self) -> str:
        """Stable content hash over canonical value tokens."""
        h = hashlib.sha256()
        h.update("\x1f".join(self.column_names).encode())
        for row in self.rows:
            h.update(b"\x1e")
            h.update("\x1f".join(_canonical_token(v) for v in row).encode())
        return h.hexdigest()


def _canonical_token(value) -> str:
    if isinstance(value, bool):
        raise InvalidData("boolean cells are not part of any result schema")
    if isinstance(value, int):
        return f"i:{value}"
    if isinstance(value, float):
        return f"f:{value!r}"
    if isinstance(value, Decimal):
        return f"d:{decimal_to_canonical_str(value)}"
    if isinstance(value, str):
        return f"s:{value}"
    raise InvalidData(f"unsupported cell type {type(value).__name__}")


__all__ = [
    "NS_PER_SEC", "NS_PER_MIN", "NS_PER_HOUR", "NS_PER_DAY", "MAX_BOOK_LEVELS",
    "Side", "Trade", "BookLevel", "BookSnapshot", "TimeBucket", "TimeRange",
    "ClosingPriceSeries", "ReturnSeries", "Category", "BenchmarkProfile",
    "BENCHMARK_PROFILES", "BENCHMARK_IDS", "READ_BENCHMARK_IDS",
    "BenchmarkSpec", "default_specs", "ResultTable",
    "bucket_of", "ns_of_day", "day_of_ns",
]
