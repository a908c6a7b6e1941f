"""Bit-exact CSV schemas for trades and book snapshots.

trades:  timestamp,exchange,symbol,side,price,amount
books:   timestamp,exchange,symbol,b1price,b1size,...,b20price,b20size,
         a1price,a1size,...,a20price,a20size

Timestamps are `YYYY-MM-DDTHH:MM:SS.fffffffffZ` (nanoseconds, UTC); decimal
values use up to 8 fractional digits with no exponent and no trailing
zeros; absent book levels are empty fields. No field ever needs quoting.

Writing formats values through per-chunk lookup tables and csv.writer;
reading goes through pyarrow's CSV reader, decoding each column's distinct
strings exactly once, so both directions stay exact and fast on
million-row files.
"""

from __future__ import annotations

import csv
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import pyarrow as pa
import pyarrow.compute as pc
import pyarrow.csv as pacsv

from ..columns import BooksFrame, TradesFrame
from ..errors import CsvFormatError
from ..fp import fp_to_str
from ..model import MAX_BOOK_LEVELS, NS_PER_DAY, NS_PER_SEC

TRADES_COLUMNS = ("timestamp", "exchange", "symbol", "side", "price", "amount")
BOOKS_COLUMNS = (
    ("timestamp", "exchange", "symbol")
    + tuple(f"b{i}{kind}" for i in range(1, MAX_BOOK_LEVELS + 1) for kind in ("price", "size"))
    + tuple(f"a{i}{kind}" for i in range(1, MAX_BOOK_LEVELS + 1) for kind in ("price", "size"))
)

TS_LEN = 30  # YYYY-MM-DDTHH:MM:SS.fffffffffZ
_WRITE_CHUNK = 100_000


# ---------------------------------------------------------------- writing

def format_timestamps(ts: np.ndarray) -> np.ndarray:
    """int64 ns -> object array of 30-char ISO strings."""
    n = len(ts)
    out = np.empty((n, TS_LEN), dtype=np.uint8)
    days = ts // NS_PER_DAY
    intraday = ts - days * NS_PER_DAY
    for day in np.unique(days):
        prefix = datetime.fromtimestamp(
            int(day) * 86_400, tz=timezone.utc).strftime("%Y-%m-%dT")
        out[days == day, :11] = np.frombuffer(prefix.encode(), dtype=np.uint8)
    seconds, nanos = np.divmod(intraday, NS_PER_SEC)
    minutes, ss = np.divmod(seconds, 60)
    hh, mm = np.divmod(minutes, 60)
    zero = ord("0")
    for pos, value in ((11, hh // 10), (12, hh % 10), (14, mm // 10), (15, mm % 10),
                       (17, ss // 10), (18, ss % 10)):
        out[:, pos] = value + zero
    out[:, 13] = ord(":")
    out[:, 16] = ord(":")
    out[:, 19] = ord(".")
    scale = 100_000_000
    for pos in range(20, 29):
        digit, nanos = np.divmod(nanos, scale)
        out[:, pos] = digit + zero
        scale //= 10
    out[:, 29] = ord("Z")
    return out.view(f"S{TS_LEN}").reshape(n).astype("U30").astype(object)


class _FormatCache:
    """fp8 int -> canonical text, shared across chunks and columns."""

    def __init__(self, zero_text: str):
        self.cache: dict[int, str] = {0: zero_text}

    def column(self, units: np.ndarray) -> np.ndarray:
        uniq, inverse = np.unique(units, return_inverse=True)
        texts = np.empty(len(uniq), dtype=object)
        cache = self.cache
        for i, value in enumerate(uniq.tolist()):
            cached = cache.get(value)
            if cached is None:
                cached = fp_to_str(value)
                cache[value] = cached
            texts[i] = cached
        return texts[inverse]


def write_trades_csv(path: Path, chunks: Iterable[TradesFrame]) -> int:
    """Write trade chunks; returns rows written."""
    cache = _FormatCache(zero_text="0")
    side_lut = np.array(("buy", "sell"), dtype=object)
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRADES_COLUMNS)
        for frame in chunks:
            exch_lut = np.array(frame.exchange_values or ("",), dtype=object)
            sym_lut = np.array(frame.symbol_values or ("",), dtype=object)
            for start in range(0, len(frame), _WRITE_CHUNK):
                part = slice(start, min(start + _WRITE_CHUNK, len(frame)))
                writer.writerows(zip(
                    format_timestamps(frame.timestamp[part]),
                    exch_lut[frame.exchange_codes[part]],
                    sym_lut[frame.symbol_codes[part]],
                    side_lut[frame.side[part]],
                    cache.column(frame.price[part]),
                    cache.column(frame.amount[part]),
                ))
                rows += part.stop - part.start
    return rows


def write_books_csv(path: Path, chunks: Iterable[BooksFrame]) -> int:
    """Write book-snapshot chunks; absent levels become empty fields."""
    cache = _FormatCache(zero_text="")
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOOKS_COLUMNS)
        for frame in chunks:
            if frame.levels != MAX_BOOK_LEVELS:
                raise CsvFormatError("books CSV requires full 20-level frames")
            exch_lut = np.array(frame.exchange_values or ("",), dtype=object)
            sym_lut = np.array(frame.symbol_values or ("",), dtype=object)
            for start in range(0, len(frame), _WRITE_CHUNK):
                part = slice(start, min(start + _WRITE_CHUNK, len(frame)))
                columns = [
                    format_timestamps(frame.timestamp[part]),
                    exch_lut[frame.exchange_codes[part]],
                    sym_lut[frame.symbol_codes[part]],
                ]
                for side_px, side_sz in ((frame.bid_price, frame.bid_size),
                                         (frame.ask_price, frame.ask_size)):
                    for level in range(MAX_BOOK_LEVELS):
                        columns.append(cache.column(side_px[part, level]))
                        columns.append(cache.column(side_sz[part, level]))
                writer.writerows(zip(*columns))
                rows += part.stop - part.start
    return rows


# ---------------------------------------------------------------- reading

def _open_csv(path: Path, columns: tuple[str, ...]):
    first_invalid: list[int | None] = []

    def on_invalid(row) -> str:
        if not first_invalid:
            first_invalid.append(getattr(row, "number", None))
        return "error"

    reader = pacsv.open_csv(
        path,
        read_options=pacsv.ReadOptions(block_size=32 << 20),
        convert_options=pacsv.ConvertOptions(
            column_types={c: pa.string() for c in columns}),
        parse_options=pacsv.ParseOptions(quote_char=False, invalid_row_handler=on_invalid),
    )
    return reader, first_invalid


def _arrow_chunks(path: Path, columns: tuple[str, ...]) -> Iterator[tuple[pa.RecordBatch, int]]:
    """Yield (record batch, first data line number) per reader block."""
    if not Path(path).exists():
        raise CsvFormatError("file does not exist", path=str(path))
    try:
        reader, first_invalid = _open_csv(path, columns)
    except pa.ArrowInvalid as exc:
        raise CsvFormatError(str(exc), path=str(path)) from None
    line = 2  # data starts after the header
    try:
        for batch in reader:
            if tuple(batch.schema.names) != columns:
                raise CsvFormatError(
                    f"header mismatch: expected {','.join(columns)}, "
                    f"got {','.join(batch.schema.names)}",
                    line=1, path=str(path))
            yield batch, line
            line += batch.num_rows
    except pa.ArrowInvalid as exc:
        raise CsvFormatError(
            str(exc), line=first_invalid[0] if first_invalid else None,
            path=str(path)) from None
    finally:
        reader.close()


def _string_bytes(arr: pa.Array) -> tuple[np.ndarray, np.ndarray]:
    """Arrow string array -> (uint8 data, int offsets) without copying."""
    if arr.null_count:
        arr = arr.fill_null("")
    offsets = np.frombuffer(arr.buffers()[1], dtype=np.int32,
                            count=len(arr) + 1, offset=arr.offset * 4).astype(np.int64)
    data = np.frombuffer(arr.buffers()[2], dtype=np.uint8)
    return data, offsets


def _dictionary(arr: pa.Array) -> tuple[list[str], np.ndarray]:
    """Distinct strings in first-appearance order plus int codes per row."""
    encoded = pc.dictionary_encode(arr)
    if isinstance(encoded, pa.ChunkedArray):
        encoded = encoded.combine_chunks()
    codes = encoded.indices.to_numpy(zero_copy_only=False).astype(np.int32)
    return encoded.dictionary.to_pylist(), codes


def parse_timestamps(arr: pa.Array, line_base: int, path: str) -> np.ndarray:
    """Strict 30-char ISO ns timestamps -> int64 ns."""
    n = len(arr)
    if n == 0:
        return np.empty(0, np.int64)
    data, offsets = _string_bytes(arr)
    lengths = np.diff(offsets)
    if (lengths != TS_LEN).any():
        bad = int(np.nonzero(lengths != TS_LEN)[0][0])
        raise CsvFormatError(
            f"bad timestamp {arr[bad].as_py()!r}", line=line_base + bad, path=path)
    digits = data[offsets[0]:offsets[-1]].reshape(n, TS_LEN)
    fixed = digits[:, [4, 7, 10, 13, 16, 19, 29]]
    expected = np.frombuffer(b"--T::.Z", dtype=np.uint8)
    digit_cols = [0, 1, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18] + list(range(20, 29))
    packed = digits[:, digit_cols].astype(np.int64) - ord("0")
    bad_mask = (fixed != expected).any(axis=1) | (packed > 9).any(axis=1) | (packed < 0).any(axis=1)
    if bad_mask.any():
        bad = int(np.nonzero(bad_mask)[0][0])
        raise CsvFormatError(
            f"bad timestamp {arr[bad].as_py()!r}", line=line_base + bad, path=path)
    year = packed[:, 0] * 1000 + packed[:, 1] * 100 + packed[:, 2] * 10 + packed[:, 3]
    month = packed[:, 4] * 10 + packed[:, 5]
    day = packed[:, 6] * 10 + packed[:, 7]
    date_key = year * 10_000 + month * 100 + day
    day_ns = np.empty(n, dtype=np.int64)
    for key in np.unique(date_key):
        y, rem = divmod(int(key), 10_000)
        m, d = divmod(rem, 100)
        try:
            epoch_day = (date(y, m, d) - date(1970, 1, 1)).days
        except ValueError:
            bad = int(np.nonzero(date_key == key)[0][0])
            raise CsvFormatError(
                f"bad calendar date {arr[bad].as_py()!r}",
                line=line_base + bad, path=path) from None
        day_ns[date_key == key] = epoch_day * NS_PER_DAY
    hh = packed[:, 8] * 10 + packed[:, 9]
    mm = packed[:, 10] * 10 + packed[:, 11]
    ss = packed[:, 12] * 10 + packed[:, 13]
    time_bad = (hh > 23) | (mm > 59) | (ss > 59)
    if time_bad.any():
        bad = int(np.nonzero(time_bad)[0][0])
        raise CsvFormatError(
            f"bad time of day {arr[bad].as_py()!r}", line=line_base + bad, path=path)
    nanos = np.zeros(n, dtype=np.int64)
    for c in range(14, 23):
        nanos = nanos * 10 + packed[:, c]
    return day_ns + (hh * 3600 + mm * 60 + ss) * NS_PER_SEC + nanos


_MAX_FIELD = 20  # 11 integer digits + dot + 8 fractional digits


def parse_decimal_column(arr: pa.Array, column: str, line_base: int, path: str,
                         allow_empty: bool) -> np.ndarray:
    """Exact vectorized parse of `^[0-9]+(\\.[0-9]{1,8})?$` fields to fp8 units.

    Works on the column's raw bytes; only malformed rows fall back to
    per-value error reporting.
    """
    n = len(arr)
    if n == 0:
        return np.empty(0, np.int64)
    data, offsets = _string_bytes(arr)
    lengths = np.diff(offsets)
    width = int(lengths.max(initial=0))
    if width == 0:
        if allow_empty:
            return np.zeros(n, np.int64)
        raise CsvFormatError(f"empty {column} value", line=line_base, path=path)
    if width > _MAX_FIELD:
        bad = int(np.nonzero(lengths > _MAX_FIELD)[0][0])
        raise CsvFormatError(
            f"bad decimal in {column}: {arr[bad].as_py()!r}",
            line=line_base + bad, path=path)
    positions = np.arange(width, dtype=np.int64)
    gather = offsets[:-1, None] + positions[None, :]
    in_field = positions[None, :] < lengths[:, None]
    padded = np.concatenate((data, np.full(width, ord(" "), np.uint8)))
    matrix = np.where(in_field, padded[np.minimum(gather, len(data))], ord(" "))

    is_dot = matrix == ord(".")
    is_digit = (matrix >= ord("0")) & (matrix <= ord("9"))
    dot_count = is_dot.sum(axis=1)
    dot_pos = np.where(dot_count > 0, is_dot.argmax(axis=1), lengths)
    frac_len = np.where(dot_pos < lengths, lengths - dot_pos - 1, 0)
    empty = lengths == 0
    malformed = (
        (dot_count > 1)
        | (in_field & ~is_digit & ~is_dot).any(axis=1)
        | (dot_pos == 0)
        | ((dot_count > 0) & (frac_len == 0))
        | (frac_len > 8)
        | (dot_pos > 11)
    )
    bad = (malformed & ~empty) | (empty & (not allow_empty))
    if bad.any():
        bad_row = int(np.nonzero(bad)[0][0])
        raise CsvFormatError(
            f"bad decimal in {column}: {arr[bad_row].as_py()!r}",
            line=line_base + bad_row, path=path)
    # Horner over the digit characters (the dot contributes nothing), then
    # scale by the missing fractional digits; <= 18 total digits fits int64.
    units = np.zeros(n, np.int64)
    for j in range(width):
        digit_here = is_digit[:, j]
        units = np.where(digit_here, units * 10 + (matrix[:, j] - ord("0")), units)
    units *= np.power(10, 8 - frac_len)
    units[empty] = 0
    return units


def _parse_identifiers(arr: pa.Array, column: str, line_base: int, path: str):
    names, codes = _dictionary(arr)
    if "" in names:
        bad = int(np.nonzero(codes == names.index(""))[0][0])
        raise CsvFormatError(f"empty {column} identifier", line=line_base + bad, path=path)
    return codes, tuple(names)


def read_trades_csv(path: Path) -> Iterator[TradesFrame]:
    """Parse a trades CSV in chunks; raises CsvFormatError with line numbers."""
    for batch, line_base in _arrow_chunks(path, TRADES_COLUMNS):
        column = {name: batch.column(i) for i, name in enumerate(batch.schema.names)}
        ts = parse_timestamps(column["timestamp"], line_base, str(path))
        exchange_codes, exchanges = _parse_identifiers(
            column["exchange"], "exchange", line_base, str(path))
        symbol_codes, symbols = _parse_identifiers(
            column["symbol"], "symbol", line_base, str(path))
        side_names, side_codes = _dictionary(column["side"])
        side_map = np.empty(max(len(side_names), 1), dtype=np.int8)
        for i, name in enumerate(side_names):
            if name not in ("buy", "sell"):
                bad = int(np.nonzero(side_codes == i)[0][0])
                raise CsvFormatError(
                    f"bad side {name!r}", line=line_base + bad, path=str(path))
            side_map[i] = 0 if name == "buy" else 1
        side = side_map[side_codes] if len(side_names) else np.empty(0, np.int8)
        price = parse_decimal_column(
            column["price"], "price", line_base, str(path), allow_empty=False)
        amount = parse_decimal_column(
            column["amount"], "amount", line_base, str(path), allow_empty=False)
        yield TradesFrame(ts, exchange_codes, exchanges, symbol_codes, symbols,
                          side, price, amount)


def read_books_csv(path: Path) -> Iterator[BooksFrame]:
    """Parse a books CSV in chunks; empty level fields become 0 sentinels."""
    for batch, line_base in _arrow_chunks(path, BOOKS_COLUMNS):
        column = {name: batch.column(i) for i, name in enumerate(batch.schema.names)}
        ts = parse_timestamps(column["timestamp"], line_base, str(path))
        exchange_codes, exchanges = _parse_identifiers(
            column["exchange"], "exchange", line_base, str(path))
        symbol_codes, symbols = _parse_identifiers(
            column["symbol"], "symbol", line_base, str(path))
        n = len(ts)
        arrays = {}
        for prefix, px_name, sz_name in (("b", "bid_price", "bid_size"),
                                         ("a", "ask_price", "ask_size")):
            px = np.zeros((n, MAX_BOOK_LEVELS), np.int64)
            sz = np.zeros((n, MAX_BOOK_LEVELS), np.int64)
            for level in range(1, MAX_BOOK_LEVELS + 1):
                px[:, level - 1] = parse_decimal_column(
                    column[f"{prefix}{level}price"], f"{prefix}{level}price",
                    line_base, str(path), allow_empty=True)
                sz[:, level - 1] = parse_decimal_column(
                    column[f"{prefix}{level}size"], f"{prefix}{level}size",
                    line_base, str(path), allow_empty=True)
            arrays[px_name] = px
            arrays[sz_name] = sz
        yield BooksFrame(ts, exchange_codes, exchanges, symbol_codes, symbols,
                         arrays["bid_price"], arrays["bid_size"],
                         arrays["ask_price"], arrays["ask_size"])
