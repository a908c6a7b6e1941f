"""Deterministic synthetic generator for one day of trades and book snapshots.

Replaces live exchange capture: per-symbol prices follow a geometric random
walk around the configured mean, amounts are log-normal around the
configured median, and every output is a pure function of the seed. The
random source is the counter-based SplitMix64 scheme in tickbench.prng, so
generation can run in bounded-memory chunks and still be bit-identical to a
one-shot run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import date
from decimal import Decimal
from typing import Iterator

import numpy as np

from .columns import BooksFrame, TradesFrame
from .errors import InvalidArgument
from .fp import fp_from_decimal
from .model import MAX_BOOK_LEVELS, NS_PER_DAY, ns_of_day
from .prng import Stream, normals

# Amounts and sizes are drawn on a 1e-4 grid (fp8 units are multiples of
# AMOUNT_GRID); prices land on the symbol's tick grid.
AMOUNT_GRID = 10_000
AMOUNT_SIGMA = 0.35
MAX_EXTRA_GAP_TICKS = 2
MAX_EXTRA_SPREAD_TICKS = 2
CHUNK_ROWS = 150_000


@dataclass(frozen=True)
class SymbolProfile:
    """Statistical profile of one generated symbol.

    Mean prices and amounts are arbitrary configuration values, not
    calibrated market truth.
    """

    symbol: str
    mean_price: Decimal
    mean_amount: Decimal
    relative_volatility: float
    tick_size: Decimal
    weight: float

    def __post_init__(self):
        if self.mean_price <= 0 or self.mean_amount <= 0 or self.tick_size <= 0:
            raise InvalidArgument(f"profile for {self.symbol} must be strictly positive")
        if not (0 < self.relative_volatility < 1):
            raise InvalidArgument("relative_volatility must be in (0, 1)")
        if not (0 < self.weight <= 1):
            raise InvalidArgument("weight must be in (0, 1]")


# Row-count weights follow the observed 8.81 : 10.01 : 0.76 split between
# the three symbols. Means, ticks and volatilities are arbitrary defaults,
# not calibrated market truth.
DEFAULT_SYMBOLS = (
    SymbolProfile("BTC-USD", Decimal("21000"), Decimal("0.05"), 2e-5,
                  Decimal("0.1"), 8.81 / 19.58),
    SymbolProfile("ETH-USD", Decimal("1100"), Decimal("0.5"), 2e-5,
                  Decimal("0.01"), 10.01 / 19.58),
    SymbolProfile("USDT-USD", Decimal("1.0001"), Decimal("500"), 2e-6,
                  Decimal("0.0001"), 0.76 / 19.58),
)

DEFAULT_TRADES_ROWS = 1_000_000
DEFAULT_BOOK_ROWS = 1_500_000


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    day: date
    trades_rows: int = DEFAULT_TRADES_ROWS
    book_rows: int = DEFAULT_BOOK_ROWS
    symbols: tuple[SymbolProfile, ...] = DEFAULT_SYMBOLS
    exchanges: tuple[str, ...] = ("EX1",)

    def __post_init__(self):
        if self.trades_rows < 0 or self.book_rows < 0:
            raise InvalidArgument("row counts must be >= 0")
        if not self.symbols:
            raise InvalidArgument("at least one symbol profile is required")
        if not self.exchanges:
            raise InvalidArgument("at least one exchange is required")
        total = math.fsum(p.weight for p in self.symbols)
        if abs(total - 1.0) > 1e-9:
            raise InvalidArgument(f"symbol weights must sum to 1, got {total}")


def _strict_timestamps(stream: Stream, day_start: int, rows: int) -> np.ndarray:
    """Strictly increasing ns timestamps inside the UTC day."""
    span = NS_PER_DAY - rows
    draws = np.sort(stream.integers(0, rows, span))
    return day_start + draws + np.arange(rows, dtype=np.int64)


def _symbol_assignment(stream: Stream, profiles, rows: int) -> np.ndarray:
    cumulative = np.cumsum([p.weight for p in profiles])
    cumulative[-1] = 1.0
    u = stream.uniform(0, rows)
    return np.searchsorted(cumulative, u, side="right").astype(np.int32)


class _WalkState:
    """Per-(stream, symbol) log-price walk with chunk carry."""

    def __init__(self, seed: int, name: str, profile: SymbolProfile):
        self.seed = seed
        self.name = name
        self.profile = profile
        self.offset = 0
        self.carry = 0.0
        self.log_mean = math.log(float(profile.mean_price))

    def prices(self, count: int) -> np.ndarray:
        """Next `count` walk prices as floats."""
        steps = normals(self.seed, self.name, self.offset, count)
        steps *= self.profile.relative_volatility
        log_prices = self.carry + np.cumsum(steps)
        self.carry = float(log_prices[-1]) if count else self.carry
        self.offset += count
        return np.exp(self.log_mean + log_prices)


def _to_tick_units(prices: np.ndarray, tick_fp8: int) -> np.ndarray:
    """Round float prices to the tick grid, in fp8 units, strictly positive."""
    ticks = np.rint(prices * (10**8 / tick_fp8)).astype(np.int64)
    np.maximum(ticks, 1, out=ticks)
    return ticks


def _amounts_fp8(seed: int, name: str, profile: SymbolProfile,
                 offset: int, count: int) -> np.ndarray:
    """Log-normal amounts with median mean_amount, on the 1e-4 grid."""
    z = normals(seed, name, offset, count)
    values = float(profile.mean_amount) * np.exp(AMOUNT_SIGMA * z)
    units = np.rint(values * (10**8 / AMOUNT_GRID)).astype(np.int64) * AMOUNT_GRID
    np.maximum(units, AMOUNT_GRID, out=units)
    return units


def generate_trades(config: GeneratorConfig) -> TradesFrame:
    """Exactly trades_rows trades, strictly increasing timestamps, seeded."""
    rows = config.trades_rows
    day_start = ns_of_day(config.day)
    profiles = config.symbols
    ts = _strict_timestamps(Stream(config.seed, "trades/ts"), day_start, rows)
    sym = _symbol_assignment(Stream(config.seed, "trades/symbol"), profiles, rows)
    side = (Stream(config.seed, "trades/side").bits(0, rows) & np.uint64(1)).astype(np.int8)
    exch = Stream(config.seed, "trades/exchange").integers(
        0, rows, len(config.exchanges)).astype(np.int32)

    price = np.empty(rows, dtype=np.int64)
    amount = np.empty(rows, dtype=np.int64)
    for code, profile in enumerate(profiles):
        index = np.nonzero(sym == code)[0]
        walk = _WalkState(config.seed, f"trades/walk/{profile.symbol}", profile)
        tick_fp8 = fp_from_decimal(profile.tick_size)
        done = 0
        while done < len(index):
            part = index[done:done + CHUNK_ROWS]
            price[part] = _to_tick_units(walk.prices(len(part)), tick_fp8) * tick_fp8
            amount[part] = _amounts_fp8(
                config.seed, f"trades/amount/{profile.symbol}", profile, done, len(part))
            done += len(part)

    return TradesFrame(
        timestamp=ts, exchange_codes=exch, exchange_values=config.exchanges,
        symbol_codes=sym, symbol_values=tuple(p.symbol for p in profiles),
        side=side, price=price, amount=amount)


def _book_chunk(config: GeneratorConfig, exchange_code: int, ts: np.ndarray,
                sym: np.ndarray, walks: dict[int, _WalkState],
                size_offsets: dict[int, int]) -> BooksFrame:
    rows = len(ts)
    exchange = config.exchanges[exchange_code]
    profiles = config.symbols
    seed = config.seed

    bid_price = np.zeros((rows, MAX_BOOK_LEVELS), np.int64)
    ask_price = np.zeros((rows, MAX_BOOK_LEVELS), np.int64)
    bid_size = np.zeros((rows, MAX_BOOK_LEVELS), np.int64)
    ask_size = np.zeros((rows, MAX_BOOK_LEVELS), np.int64)

    for code, profile in enumerate(profiles):
        index = np.nonzero(sym == code)[0]
        if index.size == 0:
            continue
        n = index.size
        tick_fp8 = fp_from_decimal(profile.tick_size)
        mid_ticks = _to_tick_units(walks[code].prices(n), tick_fp8)
        offset = size_offsets[code]
        base = f"books/{exchange}/{profile.symbol}"

        half = 1 + Stream(seed, base + "/halfspread").integers(
            offset, n, MAX_EXTRA_SPREAD_TICKS + 1)
        # keep the deepest level strictly positive even for tiny tick counts
        floor_ticks = 1 + (MAX_BOOK_LEVELS - 1) * (1 + MAX_EXTRA_GAP_TICKS)
        np.maximum(mid_ticks, floor_ticks + half + 1, out=mid_ticks)

        gap_stream = Stream(seed, base + "/gaps")
        gaps = 1 + gap_stream.integers(
            offset * 2 * MAX_BOOK_LEVELS, n * 2 * MAX_BOOK_LEVELS,
            MAX_EXTRA_GAP_TICKS + 1).reshape(n, 2 * MAX_BOOK_LEVELS)
        bid_steps = np.cumsum(gaps[:, :MAX_BOOK_LEVELS], axis=1)
        ask_steps = np.cumsum(gaps[:, MAX_BOOK_LEVELS:], axis=1)

        bid_ticks = (mid_ticks - half)[:, None] - (bid_steps - bid_steps[:, :1])
        ask_ticks = (mid_ticks + half)[:, None] + (ask_steps - ask_steps[:, :1])
        bid_price[index] = bid_ticks * tick_fp8
        ask_price[index] = ask_ticks * tick_fp8

        size_stream_offset = offset * 2 * MAX_BOOK_LEVELS
        sizes = _amounts_fp8(
            seed, base + "/sizes", profile,
            size_stream_offset, n * 2 * MAX_BOOK_LEVELS).reshape(n, 2 * MAX_BOOK_LEVELS)
        bid_size[index] = sizes[:, :MAX_BOOK_LEVELS]
        ask_size[index] = sizes[:, MAX_BOOK_LEVELS:]
        size_offsets[code] = offset + n

    return BooksFrame(
        timestamp=ts,
        exchange_codes=np.full(rows, exchange_code, np.int32),
        exchange_values=config.exchanges,
        symbol_codes=sym, symbol_values=tuple(p.symbol for p in profiles),
        bid_price=bid_price, bid_size=bid_size,
        ask_price=ask_price, ask_size=ask_size)


def iter_book_chunks(config: GeneratorConfig) -> Iterator[BooksFrame]:
    """Book snapshots in timestamp order, in bounded-memory chunks.

    Rows are split evenly across the configured exchanges, each exchange
    following independent walks that share the symbol means. With one
    exchange the chunks arrive already merged; with several, per-exchange
    streams are merge-sorted by timestamp (ties keep exchange order).
    """
    day_start = ns_of_day(config.day)
    profiles = config.symbols
    n_exchanges = len(config.exchanges)
    per_exchange: list[dict] = []
    for e in range(n_exchanges):
        rows_e = config.book_rows // n_exchanges + (1 if e < config.book_rows % n_exchanges else 0)
        name = config.exchanges[e]
        ts = _strict_timestamps(Stream(config.seed, f"books/{name}/ts"), day_start, rows_e)
        sym = _symbol_assignment(Stream(config.seed, f"books/{name}/symbol"), profiles, rows_e)
        per_exchange.append({
            "ts": ts, "sym": sym, "done": 0,
            "walks": {code: _WalkState(config.seed, f"books/{name}/{p.symbol}/mid", p)
                      for code, p in enumerate(profiles)},
            "size_offsets": {code: 0 for code in range(len(profiles))},
        })

    if n_exchanges == 1:
        state = per_exchange[0]
        while state["done"] < len(state["ts"]):
            s, e = state["done"], min(state["done"] + CHUNK_ROWS, len(state["ts"]))
            yield _book_chunk(config, 0, state["ts"][s:e], state["sym"][s:e],
                              state["walks"], state["size_offsets"])
            state["done"] = e
        return

    # Multi-exchange: refill one bounded buffer per exchange and emit
    # merged slices up to the smallest buffered horizon, so memory stays
    # proportional to the chunk size regardless of total rows.
    from .columns import concat_books

    budget = max(CHUNK_ROWS // n_exchanges, 1)
    buffers: list[BooksFrame | None] = [None] * n_exchanges

    def refill(e: int):
        state = per_exchange[e]
        if state["done"] >= len(state["ts"]):
            buffers[e] = None
            return
        s, end = state["done"], min(state["done"] + budget, len(state["ts"]))
        chunk = _book_chunk(config, e, state["ts"][s:end], state["sym"][s:end],
                            state["walks"], state["size_offsets"])
        state["done"] = end
        buffers[e] = chunk

    for e in range(n_exchanges):
        refill(e)
    while any(b is not None for b in buffers):
        # Per-exchange timestamps are sorted, so every unbuffered row is
        # later than its exchange's buffered tail; rows up to the smallest
        # buffered tail can be emitted in final order.
        horizon = min(int(b.timestamp[-1]) for b in buffers if b is not None)
        ready = []
        for e in range(n_exchanges):
            buf = buffers[e]
            if buf is None:
                continue
            cut = int(np.searchsorted(buf.timestamp, horizon, side="right"))
            if cut:
                ready.append(buf.take(np.arange(cut)))
            rest = buf.take(np.arange(cut, len(buf)))
            buffers[e] = rest if len(rest) else None
            if buffers[e] is None:
                refill(e)
        merged = concat_books(ready)
        order = np.argsort(merged.timestamp, kind="stable")
        yield merged.take(order)


def generate_books(config: GeneratorConfig) -> BooksFrame:
    """Exactly book_rows snapshots with 20 full levels per side, seeded."""
    from .columns import concat_books

    return concat_books(list(iter_book_chunks(config)))


def multi_exchange_config(config: GeneratorConfig, n_exchanges: int) -> GeneratorConfig:
    """The same config spread over exchange ids EX1..EXn."""
    if n_exchanges < 2:
        raise InvalidArgument(f"multi-exchange generation needs >= 2 exchanges, got {n_exchanges}")
    return replace(config, exchanges=tuple(f"EX{i}" for i in range(1, n_exchanges + 1)))


def generate_multi_exchange_day(config: GeneratorConfig, n_exchanges: int) -> BooksFrame:
    """Book snapshots spread over exchanges EX1..EXn with independent walks."""
    return generate_books(multi_exchange_config(config, n_exchanges))
