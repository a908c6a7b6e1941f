"""Reference analytics over trades and order-book snapshots.

This module is the executable ground truth for every read benchmark:
volume and VWAP aggregation, top-of-book and spread extraction, market
depth, NBBO consolidation, interval closing prices, log returns and
windowed volatility. External database results are judged against the
output of these functions.

Decimal sums (volume, prices, spreads, depth sums) are computed exactly in
fp8 integer arithmetic. Ratios and logarithms are evaluated in binary
floating point at the point of computation, with pairwise or exactly
rounded summation throughout.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np

from .columns import BooksFrame, SIDE_CODES, as_books_frame, as_trades_frame
from .errors import InvalidArgument, InvalidData, NotFound
from .fp import FP_ONE, fp_to_decimal
from .model import (
    BenchmarkSpec,
    ClosingPriceSeries,
    ResultTable,
    ReturnSeries,
    Side,
    TimeBucket,
    TimeRange,
    bucket_of,
)
from .prng import Stream

SIDE_NAMES = ("buy", "sell")


@dataclass
class Diagnostics:
    """Per-call counters for rows an operation had to skip."""

    skipped_rows: int = 0
    notes: list[str] = field(default_factory=list)

    def skip(self, count: int, note: str | None = None):
        self.skipped_rows += int(count)
        if note and count:
            self.notes.append(note)


@dataclass(frozen=True)
class DepthSeries:
    """Average market depth per non-empty bucket, in bucket order."""

    entries: tuple[tuple[TimeBucket, float], ...]

    def __post_init__(self):
        for bucket, depth in self.entries:
            if depth < 0:
                raise InvalidData(f"negative depth in bucket {bucket.start}")
        for i in range(1, len(self.entries)):
            if self.entries[i][0].start <= self.entries[i - 1][0].start:
                raise InvalidData("depth buckets must strictly increase")


@dataclass(frozen=True)
class NbboQuote:
    """Consolidated best bid and offer for one bucket."""

    bucket: TimeBucket
    symbol: str
    best_bid: Decimal
    best_ask: Decimal
    bid_exchange: str
    ask_exchange: str


def _range_mask(ts: np.ndarray, range_: TimeRange) -> np.ndarray:
    return (ts >= range_.begin) & (ts < range_.end)


def _symbol_code(values: tuple[str, ...], symbol: str) -> int | None:
    try:
        return values.index(symbol)
    except ValueError:
        return None


def _string_ranks(values: tuple[str, ...]) -> np.ndarray:
    """rank[code] = position of values[code] in lexicographic order."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = np.empty(max(len(values), 1), dtype=np.int64)
    for pos, code in enumerate(order):
        ranks[code] = pos
    return ranks


def _group_starts(*key_arrays: np.ndarray) -> np.ndarray:
    """Start offsets of equal-key runs in already-sorted key arrays."""
    n = len(key_arrays[0])
    if n == 0:
        return np.empty(0, dtype=np.int64)
    change = np.zeros(n - 1, dtype=bool)
    for keys in key_arrays:
        change |= keys[1:] != keys[:-1]
    return np.concatenate(([0], np.nonzero(change)[0] + 1))


def _exact_group_sums(sorted_values: np.ndarray, starts: np.ndarray) -> list[int]:
    """Exact per-group sums of int64 fp8 values."""
    if len(sorted_values) == 0:
        return []
    # int64 reduceat is exact while the total cannot reach 2^62.
    if int(np.abs(sorted_values).max()) * len(sorted_values) < 2**62:
        return [int(v) for v in np.add.reduceat(sorted_values, starts)]
    values = sorted_values.tolist()
    bounds = list(starts) + [len(values)]
    return [sum(values[int(s):int(e)]) for s, e in zip(bounds, bounds[1:])]


def volume_by_bucket(
    trades,
    range_: TimeRange,
    width: int,
    symbol: str = "*",
    side: Side | None = None,
) -> ResultTable:
    """Total traded amount per (bucket, symbol, side) group.

    Empty groups are omitted; sums are exact decimals; rows are ordered by
    bucket start, then symbol, then side.
    """
    if width <= 0:
        raise InvalidArgument(f"bucket width must be > 0, got {width}")
    columns = ("bucket_start", "symbol", "side", "volume")
    f = as_trades_frame(trades)
    mask = _range_mask(f.timestamp, range_)
    if symbol != "*":
        code = _symbol_code(f.symbol_values, symbol)
        if code is None:
            return ResultTable(columns)
        mask &= f.symbol_codes == code
    if side is not None:
        mask &= f.side == SIDE_CODES[side]
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return ResultTable(columns)
    buckets = (f.timestamp[idx] // width) * width
    sym_codes = f.symbol_codes[idx].astype(np.int64)
    sides = f.side[idx].astype(np.int64)
    ranks = _string_ranks(f.symbol_values)
    order = np.lexsort((sides, ranks[sym_codes], buckets))
    buckets, sym_codes, sides = buckets[order], sym_codes[order], sides[order]
    amounts = f.amount[idx][order]
    starts = _group_starts(buckets, sym_codes, sides)
    sums = _exact_group_sums(amounts, starts)
    rows = tuple(
        (
            int(buckets[s]),
            f.symbol_values[sym_codes[s]],
            SIDE_NAMES[sides[s]],
            Decimal(total).scaleb(-8),
        )
        for s, total in zip(starts, sums)
    )
    return ResultTable(columns, rows)


def vwap_by_bucket(trades, range_: TimeRange, width: int, symbol: str) -> ResultTable:
    """Volume-weighted average price per non-empty bucket.

    The value and volume sums are exact integers; the single division per
    bucket happens in binary floating point.
    """
    if width <= 0:
        raise InvalidArgument(f"bucket width must be > 0, got {width}")
    if symbol == "*":
        raise InvalidArgument("vwap requires a concrete symbol")
    columns = ("bucket_start", "vwap")
    f = as_trades_frame(trades)
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        return ResultTable(columns)
    mask = _range_mask(f.timestamp, range_) & (f.symbol_codes == code)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return ResultTable(columns)
    buckets = (f.timestamp[idx] // width) * width
    order = np.argsort(buckets, kind="stable")
    buckets = buckets[order]
    amounts = f.amount[idx][order].tolist()
    prices = f.price[idx][order].tolist()
    starts = _group_starts(buckets)
    bounds = list(starts) + [len(amounts)]
    rows = []
    for s, e in zip(bounds, bounds[1:]):
        s, e = int(s), int(e)
        value_sum = sum(map(operator.mul, amounts[s:e], prices[s:e]))  # fp8 x fp8 units
        amount_sum = sum(amounts[s:e])
        # exact integer sums, one correctly-rounded float division
        vwap = value_sum / (amount_sum * FP_ONE)
        rows.append((int(buckets[s]), vwap))
    return ResultTable(columns, tuple(rows))


def top_of_book(books, symbol: str, at: int) -> tuple[int, Decimal, Decimal]:
    """Level-1 bid and ask of the latest snapshot at or before `at`.

    Equal timestamps resolve to the latest ingested snapshot.
    """
    f = as_books_frame(books)
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        raise NotFound(f"no snapshots for symbol {symbol!r}")
    idx = np.nonzero((f.symbol_codes == code) & (f.timestamp <= at))[0]
    if idx.size == 0:
        raise NotFound(f"no snapshot for {symbol!r} at or before {at}")
    ts = f.timestamp[idx]
    chosen = int(idx[ts == ts.max()].max())
    bid = int(f.bid_price[chosen, 0])
    ask = int(f.ask_price[chosen, 0])
    if bid == 0 or ask == 0:
        raise NotFound(f"snapshot at {int(f.timestamp[chosen])} has an empty side")
    return int(f.timestamp[chosen]), fp_to_decimal(bid), fp_to_decimal(ask)


def highest_bid(books, symbol: str, range_: TimeRange) -> Decimal:
    """Maximum level-1 bid price over the range."""
    f = as_books_frame(books)
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        raise NotFound(f"no snapshots for symbol {symbol!r}")
    mask = (f.symbol_codes == code) & _range_mask(f.timestamp, range_)
    bids = f.bid_price[mask, 0]
    bids = bids[bids > 0]
    if bids.size == 0:
        raise NotFound(f"no bid snapshots for {symbol!r} in range")
    return fp_to_decimal(int(bids.max()))


def spread_series(
    books, symbol: str, range_: TimeRange, diagnostics: Diagnostics | None = None,
) -> ResultTable:
    """Per-snapshot spread (level-1 ask minus level-1 bid), in timestamp order.

    One-sided snapshots are skipped and counted on the diagnostics object.
    """
    columns = ("timestamp", "spread")
    f = as_books_frame(books)
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        return ResultTable(columns)
    mask = (f.symbol_codes == code) & _range_mask(f.timestamp, range_)
    both = (f.bid_price[:, 0] > 0) & (f.ask_price[:, 0] > 0)
    if diagnostics is not None:
        diagnostics.skip(int((mask & ~both).sum()), "one-sided snapshots skipped")
    idx = np.nonzero(mask & both)[0]
    if idx.size == 0:
        return ResultTable(columns)
    order = np.argsort(f.timestamp[idx], kind="stable")
    idx = idx[order]
    ts = f.timestamp[idx]
    spreads = f.ask_price[idx, 0] - f.bid_price[idx, 0]
    uniq, inverse = np.unique(spreads, return_inverse=True)
    lut = np.array([fp_to_decimal(int(u)) for u in uniq], dtype=object)
    dec = lut[inverse]
    rows = tuple((int(t), d) for t, d in zip(ts.tolist(), dec))
    return ResultTable(columns, rows)


def market_depth_series(
    books, symbol: str, side: Side, level_n: int, range_: TimeRange, width: int,
) -> DepthSeries:
    """Mean cumulative size over levels 1..level_n, per non-empty bucket."""
    if not (1 <= level_n <= 20):
        raise InvalidArgument(f"depth level must be in 1..20, got {level_n}")
    if width <= 0:
        raise InvalidArgument(f"bucket width must be > 0, got {width}")
    f = as_books_frame(books)
    if level_n > f.levels:
        raise InvalidArgument(
            f"frame materializes {f.levels} levels, depth level {level_n} unavailable")
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        return DepthSeries(())
    idx = np.nonzero((f.symbol_codes == code) & _range_mask(f.timestamp, range_))[0]
    if idx.size == 0:
        return DepthSeries(())
    sizes = f.bid_size if side is Side.BUY else f.ask_size
    depths = sizes[idx, :level_n].sum(axis=1)  # absent levels contribute 0
    buckets = (f.timestamp[idx] // width) * width
    order = np.argsort(buckets, kind="stable")
    buckets, depths = buckets[order], depths[order]
    starts = _group_starts(buckets)
    sums = _exact_group_sums(depths, starts)
    counts = np.diff(np.concatenate((starts, [len(depths)])))
    entries = tuple(
        (TimeBucket(int(buckets[s]), width), float(total) / (int(n) * FP_ONE))
        for s, total, n in zip(starts, sums, counts)
    )
    return DepthSeries(entries)


def nbbo_series(
    books,
    symbol: str,
    range_: TimeRange,
    width: int,
    diagnostics: Diagnostics | None = None,
) -> list[NbboQuote]:
    """Best bid and offer consolidated across exchanges, per bucket.

    Each exchange contributes its last snapshot of the bucket; price ties
    resolve to the lexicographically smallest exchange id. Buckets where no
    exchange contributes a bid or none contributes an ask are skipped.
    """
    if width <= 0:
        raise InvalidArgument(f"bucket width must be > 0, got {width}")
    f = as_books_frame(books)
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        return []
    idx = np.nonzero((f.symbol_codes == code) & _range_mask(f.timestamp, range_))[0]
    if idx.size == 0:
        return []
    ts = f.timestamp[idx]
    buckets = (ts // width) * width
    exch = f.exchange_codes[idx].astype(np.int64)
    # Last element of each (bucket, exchange) run is the latest snapshot,
    # with ingest order breaking timestamp ties.
    order = np.lexsort((np.arange(idx.size), ts, exch, buckets))
    buckets, exch, rows_sorted = buckets[order], exch[order], idx[order]
    starts = _group_starts(buckets, exch)
    ends = np.concatenate((starts[1:], [len(buckets)])) - 1
    quotes: list[NbboQuote] = []
    bucket_bounds = _group_starts(buckets[ends])
    ends_by_bucket = np.split(ends, bucket_bounds[1:])
    for group in ends_by_bucket:
        bucket_start = int(buckets[group[0]])
        bids: list[tuple[int, str]] = []
        asks: list[tuple[int, str]] = []
        for g in group:
            row = int(rows_sorted[g])
            name = f.exchange_values[f.exchange_codes[row]]
            b1 = int(f.bid_price[row, 0])
            a1 = int(f.ask_price[row, 0])
            if b1 > 0:
                bids.append((b1, name))
            if a1 > 0:
                asks.append((a1, name))
        if not bids or not asks:
            if diagnostics is not None:
                diagnostics.skip(1, f"bucket {bucket_start}: no two-sided consolidation")
            continue
        best_bid = max(b for b, _ in bids)
        best_ask = min(a for a, _ in asks)
        bid_exchange = min(name for b, name in bids if b == best_bid)
        ask_exchange = min(name for a, name in asks if a == best_ask)
        quotes.append(NbboQuote(
            bucket=TimeBucket(bucket_start, width), symbol=symbol,
            best_bid=fp_to_decimal(best_bid), best_ask=fp_to_decimal(best_ask),
            bid_exchange=bid_exchange, ask_exchange=ask_exchange))
    return quotes


def mid_quote_points(
    books, symbol: str, range_: TimeRange, diagnostics: Diagnostics | None = None,
) -> list[tuple[int, Decimal]]:
    """Per-snapshot mid quote (level-1 bid plus level-1 ask, halved)."""
    f = as_books_frame(books)
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        return []
    mask = (f.symbol_codes == code) & _range_mask(f.timestamp, range_)
    both = (f.bid_price[:, 0] > 0) & (f.ask_price[:, 0] > 0)
    if diagnostics is not None:
        diagnostics.skip(int((mask & ~both).sum()), "one-sided snapshots skipped")
    idx = np.nonzero(mask & both)[0]
    order = np.argsort(f.timestamp[idx], kind="stable")
    idx = idx[order]
    two_mid = f.bid_price[idx, 0] + f.ask_price[idx, 0]
    return [
        (int(t), fp_to_decimal(int(m)) / 2)
        for t, m in zip(f.timestamp[idx].tolist(), two_mid.tolist())
    ]


def closing_prices(
    points: Iterable[tuple[int, Decimal | int]], range_: TimeRange, width: int,
) -> ClosingPriceSeries:
    """Price with the latest timestamp per non-empty bucket.

    Timestamp ties resolve to the point latest in input order.
    """
    if width <= 0:
        raise InvalidArgument(f"bucket width must be > 0, got {width}")
    last: dict[int, tuple[int, Decimal]] = {}
    for ts, price in points:
        if not (range_.begin <= ts < range_.end):
            continue
        start = (ts // width) * width
        prev = last.get(start)
        if prev is None or ts >= prev[0]:
            value = price if isinstance(price, Decimal) else fp_to_decimal(price)
            last[start] = (ts, value)
    entries = tuple(
        (TimeBucket(start, width), last[start][1]) for start in sorted(last)
    )
    return ClosingPriceSeries(entries)


def log_returns(closes: ClosingPriceSeries) -> ReturnSeries:
    """Log difference of consecutive closes; entry i carries the later bucket.

    Differencing runs over consecutive non-empty buckets, bridging gaps.
    """
    entries = closes.entries
    for _, price in entries:
        if price <= 0:
            raise InvalidData(f"closing price must be > 0, got {price}")
    out = []
    for (_, prev), (bucket, cur) in zip(entries, entries[1:]):
        out.append((bucket, math.log(float(cur)) - math.log(float(prev))))
    return ReturnSeries(tuple(out))


def volatility(returns: ReturnSeries, window: int) -> ResultTable:
    """Sample standard deviation of returns per window.

    Windows holding a single return emit 0 so the result stays numeric and
    cross-backend comparable.
    """
    if window <= 0:
        raise InvalidArgument(f"window must be > 0, got {window}")
    for bucket, _ in returns.entries:
        if window < bucket.width:
            raise InvalidArgument(
                f"window {window} is narrower than the return bucket width {bucket.width}")
    groups: dict[int, list[float]] = {}
    for bucket, value in returns.entries:
        groups.setdefault(bucket_of(bucket.start, window).start, []).append(value)
    rows = tuple(
        (start, _sample_std(groups[start])) for start in sorted(groups)
    )
    return ResultTable(("window_start", "volatility"), rows)


def _sample_std(values: Sequence[float], ddof: int = 1) -> float:
    n = len(values)
    if n <= ddof:
        return 0.0
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - ddof)
    return math.sqrt(var)


# Internal integer pipeline shared by the complex-query benchmarks. Prices
# enter as int64 units whose scale cancels inside the log differences.

def _mid_units(f: BooksFrame, symbol: str, range_: TimeRange) -> tuple[np.ndarray, np.ndarray]:
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    mask = ((f.symbol_codes == code) & _range_mask(f.timestamp, range_)
            & (f.bid_price[:, 0] > 0) & (f.ask_price[:, 0] > 0))
    idx = np.nonzero(mask)[0]
    order = np.argsort(f.timestamp[idx], kind="stable")
    idx = idx[order]
    return f.timestamp[idx], f.bid_price[idx, 0] + f.ask_price[idx, 0]


def _trade_price_units(f, symbol: str, range_: TimeRange) -> tuple[np.ndarray, np.ndarray]:
    code = _symbol_code(f.symbol_values, symbol)
    if code is None:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    idx = np.nonzero((f.symbol_codes == code) & _range_mask(f.timestamp, range_))[0]
    order = np.argsort(f.timestamp[idx], kind="stable")
    idx = idx[order]
    return f.timestamp[idx], f.price[idx]


def _close_units(ts: np.ndarray, units: np.ndarray, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Last value per bucket for timestamp-sorted input (ties: last row wins)."""
    if len(ts) == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    buckets = (ts // width) * width
    starts = _group_starts(buckets)
    ends = np.concatenate((starts[1:], [len(buckets)])) - 1
    return buckets[ends], units[ends]


def _returns_from_units(units: np.ndarray) -> np.ndarray:
    return np.diff(np.log(units.astype(np.float64)))


def _volatility_rows(bucket_starts: np.ndarray, returns: np.ndarray, window: int, ddof: int):
    window_starts = (bucket_starts // window) * window
    starts = _group_starts(window_starts)
    bounds = list(starts) + [len(returns)]
    values = returns.tolist()
    return tuple(
        (int(window_starts[int(s)]), _sample_std(values[int(s):int(e)], ddof))
        for s, e in zip(bounds, bounds[1:])
    )


def seeded_instant(spec: BenchmarkSpec) -> int:
    """Deterministic uniform draw inside the spec's range, from its rng_seed."""
    if spec.rng_seed is None:
        raise InvalidArgument(f"{spec.id} carries no rng_seed")
    span = spec.range.end - spec.range.begin
    return spec.range.begin + Stream(spec.rng_seed, "random-instant").integer(0, span)


VOLATILITY_DDOF = {"sample": 1, "population": 0}


def run_benchmark(
    spec: BenchmarkSpec, trades, books,
    volatility_estimator: str = "sample",
    random_at: int | None = None,
) -> ResultTable:
    """Execute one read benchmark against in-memory tables.

    `volatility_estimator` selects the standard-deviation denominator for the
    volatility benchmarks; "sample" (n-1) is the reference semantics, while
    "population" exists so query assets carrying the wrong estimator can be
    detected by the consistency gate. `random_at` short-circuits the seeded
    instant of O-T when a rendered query already fixed it.
    """
    if spec.id in ("W", "SE"):
        raise InvalidArgument(f"{spec.id} is not a read benchmark")
    if volatility_estimator not in VOLATILITY_DDOF:
        raise InvalidArgument(f"unknown volatility estimator {volatility_estimator!r}")
    if spec.id in ("T-V1", "T-V2"):
        return volume_by_bucket(trades, spec.range, spec.inner_width, spec.symbol, spec.side)
    if spec.id == "T-VWAP":
        return vwap_by_bucket(trades, spec.range, spec.inner_width, spec.symbol)
    if spec.id == "O-T":
        at = random_at if random_at is not None else seeded_instant(spec)
        ts, bid, ask = top_of_book(books, spec.symbol, at)
        return ResultTable(("timestamp", "best_bid", "best_ask"), ((ts, bid, ask),))
    if spec.id in ("O-B1", "O-B2"):
        return ResultTable(("highest_bid",), ((highest_bid(books, spec.symbol, spec.range),),))
    if spec.id == "O-S":
        return spread_series(books, spec.symbol, spec.range)
    if spec.id in ("O-V1", "O-V2"):
        series = market_depth_series(
            books, spec.symbol, spec.side, spec.depth_level, spec.range, spec.inner_width)
        rows = tuple((b.start, depth) for b, depth in series.entries)
        return ResultTable(("bucket_start", "avg_depth"), rows)
    if spec.id == "O-NBBO":
        quotes = nbbo_series(books, spec.symbol, spec.range, spec.inner_width)
        rows = tuple(
            (q.bucket.start, q.symbol, q.best_bid, q.best_ask, q.bid_exchange, q.ask_exchange)
            for q in quotes)
        return ResultTable(
            ("bucket_start", "symbol", "best_bid", "best_ask", "bid_exchange", "ask_exchange"),
            rows)
    if spec.id == "C-R":
        ts, units = _mid_units(as_books_frame(books), spec.symbol, spec.range)
        bucket_starts, close_units = _close_units(ts, units, spec.inner_width)
        returns = _returns_from_units(close_units)
        rows = tuple(zip((int(b) for b in bucket_starts[1:]), returns.tolist()))
        return ResultTable(("bucket_start", "log_return"), rows)
    if spec.id in ("C-VT", "C-VO1", "C-VO2"):
        if spec.id == "C-VT":
            ts, units = _trade_price_units(as_trades_frame(trades), spec.symbol, spec.range)
        else:
            ts, units = _mid_units(as_books_frame(books), spec.symbol, spec.range)
        bucket_starts, close_units = _close_units(ts, units, spec.inner_width)
        returns = _returns_from_units(close_units)
        rows = _volatility_rows(
            bucket_starts[1:], returns, spec.outer_width,
            VOLATILITY_DDOF[volatility_estimator])
        return ResultTable(("window_start", "volatility"), rows)
    raise InvalidArgument(f"no dispatch for benchmark {spec.id}")
