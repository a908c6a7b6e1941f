"""Canonical result schemas, normalization and cross-backend comparison.

Every read benchmark has a fixed column set; normalization renames and
reorders backend output onto it, coerces cell types (timestamps to ns
epoch, numerics to Decimal or float per column class) and applies the
canonical row ordering, so two backends answering the same benchmark can
be compared cell by cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation

from ..errors import SchemaMismatch
from ..model import NS_PER_SEC, ResultTable

FLOAT_RTOL = 1e-9
FLOAT_ATOL = 1e-12


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str  # ts | str | dec | float
    aliases: tuple[str, ...] = ()


_VOLUME_COLUMNS = (
    ColumnSchema("bucket_start", "ts", ("bucket", "time", "window", "interval_start")),
    ColumnSchema("symbol", "str", ("sym",)),
    ColumnSchema("side", "str", ()),
    ColumnSchema("volume", "dec", ("total_volume", "sum_amount", "amount")),
)
_VOLATILITY_COLUMNS = (
    ColumnSchema("window_start", "ts", ("window", "one_hour", "bucket", "time")),
    ColumnSchema("volatility", "float", ("stddev", "vol")),
)

BENCHMARK_SCHEMAS: dict[str, tuple[ColumnSchema, ...]] = {
    "T-V1": _VOLUME_COLUMNS,
    "T-V2": _VOLUME_COLUMNS,
    "T-VWAP": (
        ColumnSchema("bucket_start", "ts", ("bucket", "time", "minute")),
        ColumnSchema("vwap", "float", ("price",)),
    ),
    "O-T": (
        ColumnSchema("timestamp", "ts", ("time", "ts")),
        ColumnSchema("best_bid", "dec", ("bid", "b1price")),
        ColumnSchema("best_ask", "dec", ("ask", "a1price")),
    ),
    "O-B1": (ColumnSchema("highest_bid", "dec", ("max_bid", "max", "bid")),),
    "O-B2": (ColumnSchema("highest_bid", "dec", ("max_bid", "max", "bid")),),
    "O-S": (
        ColumnSchema("timestamp", "ts", ("time", "ts")),
        ColumnSchema("spread", "dec", ("bid_ask_spread",)),
    ),
    "O-V1": (
        ColumnSchema("bucket_start", "ts", ("bucket", "time", "minute")),
        ColumnSchema("avg_depth", "float", ("depth", "market_depth", "avg")),
    ),
    "O-V2": (
        ColumnSchema("bucket_start", "ts", ("bucket", "time", "hour")),
        ColumnSchema("avg_depth", "float", ("depth", "market_depth", "avg")),
    ),
    "O-NBBO": (
        ColumnSchema("bucket_start", "ts", ("bucket", "time", "minute")),
        ColumnSchema("symbol", "str", ("sym",)),
        ColumnSchema("best_bid", "dec", ("bid",)),
        ColumnSchema("best_ask", "dec", ("ask",)),
        ColumnSchema("bid_exchange", "str", ("bid_exch",)),
        ColumnSchema("ask_exchange", "str", ("ask_exch",)),
    ),
    "C-R": (
        ColumnSchema("bucket_start", "ts", ("bucket", "time", "five_min")),
        ColumnSchema("log_return", "float", ("return", "ret")),
    ),
    "C-VT": _VOLATILITY_COLUMNS,
    "C-VO1": _VOLATILITY_COLUMNS,
    "C-VO2": _VOLATILITY_COLUMNS,
}


@dataclass(frozen=True)
class ConsistencyVerdict:
    equal: bool
    detail: str | None = None

    def __bool__(self) -> bool:
        return self.equal


def _coerce_ts(value) -> int:
    if isinstance(value, bool):
        raise SchemaMismatch(f"boolean is not a timestamp: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise SchemaMismatch(f"fractional ns timestamp: {value!r}")
        return int(value)
    if isinstance(value, datetime):
        if value.tzinfo is None:
            value = value.replace(tzinfo=timezone.utc)
        return int(value.timestamp()) * NS_PER_SEC + value.microsecond * 1000
    if isinstance(value, str):
        text = value.strip()
        nanos = 0
        if "." in text:
            head, _, frac = text.partition(".")
            frac = frac.rstrip("Zz")
            if not frac.isdigit() or len(frac) > 9:
                raise SchemaMismatch(f"bad timestamp fraction: {value!r}")
            nanos = int(frac.ljust(9, "0"))
            text = head + "Z"
        text = text.replace(" ", "T").rstrip("Zz")
        try:
            dt = datetime.fromisoformat(text).replace(tzinfo=timezone.utc)
        except ValueError:
            raise SchemaMismatch(f"bad timestamp: {value!r}") from None
        return int(dt.timestamp()) * NS_PER_SEC + nanos
    raise SchemaMismatch(f"cannot read timestamp from {type(value).__name__}")


def _coerce_dec(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, bool):
        raise SchemaMismatch(f"boolean is not a decimal: {value!r}")
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, float):
        return Decimal(repr(value))
    if isinstance(value, str):
        try:
            return Decimal(value)
        except InvalidOperation:
            raise SchemaMismatch(f"bad decimal: {value!r}") from None
    raise SchemaMismatch(f"cannot read decimal from {type(value).__name__}")


def _coerce_float(value) -> float:
    if isinstance(value, bool):
        raise SchemaMismatch(f"boolean is not numeric: {value!r}")
    if isinstance(value, (int, float, Decimal, str)):
        try:
            return float(value)
        except ValueError:
            raise SchemaMismatch(f"bad float: {value!r}") from None
    raise SchemaMismatch(f"cannot read float from {type(value).__name__}")


_COERCERS = {"ts": _coerce_ts, "str": str, "dec": _coerce_dec, "float": _coerce_float}


def schema_for(benchmark_id: str) -> tuple[ColumnSchema, ...]:
    try:
        return BENCHMARK_SCHEMAS[benchmark_id]
    except KeyError:
        raise SchemaMismatch(f"no canonical schema for benchmark {benchmark_id!r}") from None


def normalize(raw, benchmark_id: str) -> ResultTable:
    """Map raw backend output onto the benchmark's canonical ResultTable.

    Accepts a RawResult-like object (columns and rows attributes) or a
    ready ResultTable. Extra columns are dropped, missing ones raise.
    """
    schema = schema_for(benchmark_id)
    columns = tuple(raw.column_names if isinstance(raw, ResultTable) else raw.columns)
    lowered = {name.lower(): i for i, name in enumerate(columns)}
    indices = []
    for col in schema:
        idx = lowered.get(col.name.lower())
        if idx is None:
            for alias in col.aliases:
                idx = lowered.get(alias.lower())
                if idx is not None:
                    break
        if idx is None:
            raise SchemaMismatch(
                f"{benchmark_id}: result is missing column {col.name!r} "
                f"(got {', '.join(columns) or 'no columns'})")
        indices.append(idx)
    coercers = [_COERCERS[col.kind] for col in schema]
    rows = [
        tuple(coerce(row[idx]) for coerce, idx in zip(coercers, indices))
        for row in raw.rows
    ]
    rows.sort()
    return ResultTable(tuple(c.name for c in schema), tuple(rows))


def compare(a: ResultTable, b: ResultTable, benchmark_id: str) -> ConsistencyVerdict:
    """Equality up to the float tolerance; first mismatch is reported."""
    schema = schema_for(benchmark_id)
    names = tuple(c.name for c in schema)
    if a.column_names != names or b.column_names != names:
        return ConsistencyVerdict(
            False, f"column mismatch: {a.column_names} vs {b.column_names}")
    if a.n_rows != b.n_rows:
        return ConsistencyVerdict(False, f"row count {a.n_rows} vs {b.n_rows}")
    for r, (row_a, row_b) in enumerate(zip(a.rows, b.rows)):
        for c, col in enumerate(schema):
            va, vb = row_a[c], row_b[c]
            if col.kind == "float":
                bound = max(FLOAT_ATOL, FLOAT_RTOL * max(abs(va), abs(vb)))
                if abs(va - vb) > bound:
                    return ConsistencyVerdict(
                        False, f"row {r} column {col.name}: {va!r} vs {vb!r}")
            elif va != vb:
                return ConsistencyVerdict(
                    False, f"row {r} column {col.name}: {va!r} vs {vb!r}")
    return ConsistencyVerdict(True)
