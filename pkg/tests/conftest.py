"""Shared fixtures and small random dataset builders."""

import random
import sys
from datetime import date
from decimal import Decimal
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the brute/helpers modules

from tickbench.model import (
    NS_PER_DAY,
    NS_PER_SEC,
    BookLevel,
    BookSnapshot,
    Side,
    TimeRange,
    Trade,
    ns_of_day,
)

DAY = date(2022, 6, 18)
DAY_NS = ns_of_day(DAY)
DAY_RANGE = TimeRange(DAY_NS, DAY_NS + NS_PER_DAY)


def dec(value: str) -> Decimal:
    return Decimal(value)


def random_trades(rng: random.Random, n: int, symbols=("BTC-USD", "ETH-USD"),
                  exchanges=("EX1",), range_: TimeRange = DAY_RANGE) -> list[Trade]:
    trades = []
    for _ in range(n):
        ts = rng.randrange(range_.begin, range_.end)
        price = Decimal(rng.randrange(1_000, 5_000_000)) / 100
        amount = Decimal(rng.randrange(1, 500_000)) / 10_000
        trades.append(Trade(
            timestamp=ts,
            exchange=rng.choice(exchanges),
            symbol=rng.choice(symbols),
            side=rng.choice((Side.BUY, Side.SELL)),
            price=price,
            amount=amount,
        ))
    return trades


def random_book(rng: random.Random, ts: int, symbol: str, exchange: str,
                n_levels: int | None = None) -> BookSnapshot:
    levels = n_levels if n_levels is not None else rng.randint(1, 20)
    mid_ticks = rng.randrange(200, 4_000_000)
    half = rng.randint(1, 5)
    bid_ticks = mid_ticks - half
    ask_ticks = mid_ticks + half
    bids = []
    asks = []
    b, a = bid_ticks, ask_ticks
    for _ in range(levels):
        if b <= 0:
            break
        bids.append(BookLevel(Decimal(b) / 100, Decimal(rng.randrange(1, 90_000)) / 10_000))
        b -= rng.randint(1, 3)
    for _ in range(levels):
        asks.append(BookLevel(Decimal(a) / 100, Decimal(rng.randrange(1, 90_000)) / 10_000))
        a += rng.randint(1, 3)
    return BookSnapshot(ts, exchange, symbol, tuple(bids), tuple(asks))


def random_books(rng: random.Random, n: int, symbols=("BTC-USD", "ETH-USD"),
                 exchanges=("EX1",), range_: TimeRange = DAY_RANGE,
                 duplicate_ts_share: float = 0.02) -> list[BookSnapshot]:
    books = []
    for i in range(n):
        if books and rng.random() < duplicate_ts_share:
            ts = books[-1].timestamp  # pin ingest-order tie-breaking
        else:
            ts = rng.randrange(range_.begin, range_.end)
        books.append(random_book(rng, ts, rng.choice(symbols), rng.choice(exchanges)))
    return books


@pytest.fixture
def rng():
    return random.Random(20220618)


def tick_ts(seconds: float) -> int:
    """Timestamp inside the standard test day, offset in seconds."""
    return DAY_NS + int(seconds * NS_PER_SEC)
