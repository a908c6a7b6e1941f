"""Columnar in-memory tables for trades and book snapshots.

Rows are kept in ingest order; equal timestamps never get reordered, which
pins the tie-breaking used by last-in-bucket operations. Prices and sizes
are int64 fp8 units; absent book levels are 0 on both the price and size
column.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidData
from .fp import fp_from_decimal, fp_to_decimal
from .model import MAX_BOOK_LEVELS, BookLevel, BookSnapshot, Side, Trade

SIDE_CODES = {Side.BUY: 0, Side.SELL: 1}
SIDE_FROM_CODE = (Side.BUY, Side.SELL)


def encode_strings(values: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Dictionary-encode a string column into int32 codes plus a value list."""
    mapping: dict[str, int] = {}
    codes = np.empty(len(values), dtype=np.int32)
    for i, v in enumerate(values):
        code = mapping.get(v)
        if code is None:
            code = mapping.setdefault(v, len(mapping))
        codes[i] = code
    return codes, tuple(mapping)


@dataclass
class TradesFrame:
    timestamp: np.ndarray          # int64 ns
    exchange_codes: np.ndarray     # int32
    exchange_values: tuple[str, ...]
    symbol_codes: np.ndarray       # int32
    symbol_values: tuple[str, ...]
    side: np.ndarray               # int8, 0 = buy, 1 = sell
    price: np.ndarray              # int64 fp8
    amount: np.ndarray             # int64 fp8

    def __len__(self) -> int:
        return len(self.timestamp)

    @classmethod
    def empty(cls) -> "TradesFrame":
        return cls(
            np.empty(0, np.int64), np.empty(0, np.int32), (),
            np.empty(0, np.int32), (), np.empty(0, np.int8),
            np.empty(0, np.int64), np.empty(0, np.int64))

    @classmethod
    def from_trades(cls, trades: Iterable[Trade]) -> "TradesFrame":
        rows = list(trades)
        exchange_codes, exchanges = encode_strings([t.exchange for t in rows])
        symbol_codes, symbols = encode_strings([t.symbol for t in rows])
        return cls(
            timestamp=np.array([t.timestamp for t in rows], np.int64),
            exchange_codes=exchange_codes, exchange_values=exchanges,
            symbol_codes=symbol_codes, symbol_values=symbols,
            side=np.array([SIDE_CODES[t.side] for t in rows], np.int8),
            price=np.array([fp_from_decimal(t.price) for t in rows], np.int64),
            amount=np.array([fp_from_decimal(t.amount) for t in rows], np.int64),
        )

    def to_trades(self) -> list[Trade]:
        return [
            Trade(
                timestamp=int(self.timestamp[i]),
                exchange=self.exchange_values[self.exchange_codes[i]],
                symbol=self.symbol_values[self.symbol_codes[i]],
                side=SIDE_FROM_CODE[self.side[i]],
                price=fp_to_decimal(int(self.price[i])),
                amount=fp_to_decimal(int(self.amount[i])),
            )
            for i in range(len(self))
        ]

    def take(self, indices: np.ndarray) -> "TradesFrame":
        return TradesFrame(
            self.timestamp[indices], self.exchange_codes[indices], self.exchange_values,
            self.symbol_codes[indices], self.symbol_values, self.side[indices],
            self.price[indices], self.amount[indices])


@dataclass
class BooksFrame:
    """Book snapshots with the first `levels` price levels materialized.

    Full frames carry 20 levels; query paths may materialize fewer columns,
    which is enough for any depth computation up to that level.
    """

    timestamp: np.ndarray          # int64 ns
    exchange_codes: np.ndarray
    exchange_values: tuple[str, ...]
    symbol_codes: np.ndarray
    symbol_values: tuple[str, ...]
    bid_price: np.ndarray          # int64 fp8, shape (n, levels)
    bid_size: np.ndarray
    ask_price: np.ndarray
    ask_size: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamp)

    @property
    def levels(self) -> int:
        return self.bid_price.shape[1]

    @classmethod
    def empty(cls, levels: int = MAX_BOOK_LEVELS) -> "BooksFrame":
        z = np.empty((0, levels), np.int64)
        return cls(np.empty(0, np.int64), np.empty(0, np.int32), (),
                   np.empty(0, np.int32), (), z, z.copy(), z.copy(), z.copy())

    @classmethod
    def from_books(cls, books: Iterable[BookSnapshot]) -> "BooksFrame":
        rows = list(books)
        n = len(rows)
        exchange_codes, exchanges = encode_strings([b.exchange for b in rows])
        symbol_codes, symbols = encode_strings([b.symbol for b in rows])
        bid_price = np.zeros((n, MAX_BOOK_LEVELS), np.int64)
        bid_size = np.zeros((n, MAX_BOOK_LEVELS), np.int64)
        ask_price = np.zeros((n, MAX_BOOK_LEVELS), np.int64)
        ask_size = np.zeros((n, MAX_BOOK_LEVELS), np.int64)
        for i, b in enumerate(rows):
            for j, lvl in enumerate(b.bids):
                bid_price[i, j] = fp_from_decimal(lvl.price)
                bid_size[i, j] = fp_from_decimal(lvl.size)
            for j, lvl in enumerate(b.asks):
                ask_price[i, j] = fp_from_decimal(lvl.price)
                ask_size[i, j] = fp_from_decimal(lvl.size)
        return cls(
            timestamp=np.array([b.timestamp for b in rows], np.int64),
            exchange_codes=exchange_codes, exchange_values=exchanges,
            symbol_codes=symbol_codes, symbol_values=symbols,
            bid_price=bid_price, bid_size=bid_size,
            ask_price=ask_price, ask_size=ask_size)

    def to_books(self) -> list[BookSnapshot]:
        if self.levels != MAX_BOOK_LEVELS:
            raise InvalidData("only full 20-level frames can rebuild snapshots")
        out = []
        for i in range(len(self)):
            bids = tuple(
                BookLevel(fp_to_decimal(int(p)), fp_to_decimal(int(s)))
                for p, s in zip(self.bid_price[i], self.bid_size[i]) if p > 0)
            asks = tuple(
                BookLevel(fp_to_decimal(int(p)), fp_to_decimal(int(s)))
                for p, s in zip(self.ask_price[i], self.ask_size[i]) if p > 0)
            out.append(BookSnapshot(
                timestamp=int(self.timestamp[i]),
                exchange=self.exchange_values[self.exchange_codes[i]],
                symbol=self.symbol_values[self.symbol_codes[i]],
                bids=bids, asks=asks))
        return out

    def take(self, indices: np.ndarray) -> "BooksFrame":
        return BooksFrame(
            self.timestamp[indices], self.exchange_codes[indices], self.exchange_values,
            self.symbol_codes[indices], self.symbol_values,
            self.bid_price[indices], self.bid_size[indices],
            self.ask_price[indices], self.ask_size[indices])


def as_trades_frame(trades) -> TradesFrame:
    if isinstance(trades, TradesFrame):
        return trades
    return TradesFrame.from_trades(trades)


def as_books_frame(books) -> BooksFrame:
    if isinstance(books, BooksFrame):
        return books
    return BooksFrame.from_books(books)


def concat_trades(frames: Sequence[TradesFrame]) -> TradesFrame:
    frames = [f for f in frames if len(f)]
    if not frames:
        return TradesFrame.empty()
    if len(frames) == 1:
        return frames[0]
    exchange_codes, exchanges = _merge_coded([f.exchange_codes for f in frames],
                                             [f.exchange_values for f in frames])
    symbol_codes, symbols = _merge_coded([f.symbol_codes for f in frames],
                                         [f.symbol_values for f in frames])
    return TradesFrame(
        np.concatenate([f.timestamp for f in frames]),
        exchange_codes, exchanges, symbol_codes, symbols,
        np.concatenate([f.side for f in frames]),
        np.concatenate([f.price for f in frames]),
        np.concatenate([f.amount for f in frames]))


def concat_books(frames: Sequence[BooksFrame]) -> BooksFrame:
    frames = [f for f in frames if len(f)]
    if not frames:
        return BooksFrame.empty()
    if len(frames) == 1:
        return frames[0]
    levels = {f.levels for f in frames}
    if len(levels) != 1:
        raise InvalidData(f"cannot concatenate frames with differing levels: {levels}")
    exchange_codes, exchanges = _merge_coded([f.exchange_codes for f in frames],
                                             [f.exchange_values for f in frames])
    symbol_codes, symbols = _merge_coded([f.symbol_codes for f in frames],
                                         [f.symbol_values for f in frames])
    return BooksFrame(
        np.concatenate([f.timestamp for f in frames]),
        exchange_codes, exchanges, symbol_codes, symbols,
        np.concatenate([f.bid_price for f in frames]),
        np.concatenate([f.bid_size for f in frames]),
        np.concatenate([f.ask_price for f in frames]),
        np.concatenate([f.ask_size for f in frames]))


def _merge_coded(
    code_arrays: Sequence[np.ndarray], value_tuples: Sequence[tuple[str, ...]],
) -> tuple[np.ndarray, tuple[str, ...]]:
    merged: dict[str, int] = {}
    remapped = []
    for codes, values in zip(code_arrays, value_tuples):
        lut = np.empty(max(len(values), 1), dtype=np.int32)
        for local, v in enumerate(values):
            lut[local] = merged.setdefault(v, len(merged))
        remapped.append(lut[codes] if len(values) else codes.astype(np.int32))
    return np.concatenate(remapped), tuple(merged)


def decimal_column(units: np.ndarray) -> list[Decimal]:
    """fp8 int column to exact Decimals, sharing objects for repeated values."""
    uniq, inverse = np.unique(units, return_inverse=True)
    lut = np.array([fp_to_decimal(int(u)) for u in uniq], dtype=object)
    return list(lut[inverse])
