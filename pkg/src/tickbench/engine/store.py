"""Embedded columnar store: one directory per UTC day, one file per column.

Layout:
    <root>/<table>/manifest.json
    <root>/<table>/<YYYY-MM-DD>/<column>.bin            fixed-width values
    <root>/<table>/<YYYY-MM-DD>/<column>.dict.json      string dictionaries

Numerics and timestamps are little-endian int64 (int32 codes for dictionary
columns, int8 for side). Rows inside a partition are sorted by timestamp,
stable with respect to ingest order. The manifest is replaced atomically
after all column files are on disk, which is the publication point for
concurrent readers. An optional zlib mode compresses each column file so
storage-efficiency comparisons exercise both directions.
"""

from __future__ import annotations

import json
import os
import time
import tracemalloc
import zlib
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .. import analytics
from ..columns import BooksFrame, TradesFrame, concat_books, concat_trades
from ..errors import InvalidArgument, NotFound, TickbenchError
from ..model import (
    MAX_BOOK_LEVELS,
    NS_PER_DAY,
    BenchmarkSpec,
    ResultTable,
    TimeRange,
)
from . import csvio

TABLE_KINDS = ("trades", "books")
COMPRESSIONS = ("none", "zlib")
_REJECT_SAMPLES = 5

_TRADE_NUMERIC = {"timestamp": np.int64, "side": np.int8,
                  "price": np.int64, "amount": np.int64}
_BOOK_LEVEL_COLUMNS = tuple(
    f"{side}{level}{kind}"
    for side in "ba" for level in range(1, MAX_BOOK_LEVELS + 1) for kind in ("price", "size"))


@dataclass(frozen=True)
class IngestOutcome:
    table: str
    partitions_created: int
    rows_ingested: int
    rows_rejected: int
    elapsed_s: float
    reject_samples: tuple[str, ...] = ()


@dataclass(frozen=True)
class StorageReport:
    data_bytes_on_disk: int
    source_file_bytes: int
    efficiency_percent: float


@dataclass(frozen=True)
class ExecuteOutcome:
    table: ResultTable
    server_elapsed_s: float
    peak_query_bytes: int


@dataclass
class _ColumnPlan:
    """Columns a benchmark needs; everything else loads as cheap zeros."""

    trade_columns: tuple[str, ...] = ()
    need_exchange: bool = False
    bid_px: int = 0
    bid_sz: int = 0
    ask_px: int = 0
    ask_sz: int = 0

    @property
    def book_levels(self) -> int:
        return max(self.bid_px, self.bid_sz, self.ask_px, self.ask_sz, 1)


def _column_plan(spec: BenchmarkSpec) -> _ColumnPlan:
    from ..model import Side

    bid_side = spec.side is None or spec.side is Side.BUY
    if spec.id in ("T-V1", "T-V2"):
        return _ColumnPlan(trade_columns=("timestamp", "symbol", "side", "amount"))
    if spec.id == "T-VWAP":
        return _ColumnPlan(trade_columns=("timestamp", "symbol", "price", "amount"))
    if spec.id == "C-VT":
        return _ColumnPlan(trade_columns=("timestamp", "symbol", "price"))
    if spec.id in ("O-T", "O-S", "C-R", "C-VO1", "C-VO2"):
        return _ColumnPlan(bid_px=1, ask_px=1)
    if spec.id in ("O-B1", "O-B2"):
        return _ColumnPlan(bid_px=1)
    if spec.id in ("O-V1", "O-V2"):
        level = spec.depth_level
        return _ColumnPlan(bid_px=0, bid_sz=level if bid_side else 0,
                           ask_sz=0 if bid_side else level)
    if spec.id == "O-NBBO":
        return _ColumnPlan(need_exchange=True, bid_px=1, ask_px=1)
    raise InvalidArgument(f"{spec.id} is not a read benchmark")


class ColumnStore:
    """Day-partitioned columnar store over a root directory."""

    def __init__(self, root: Path | str, compression: str = "none"):
        if compression not in COMPRESSIONS:
            raise InvalidArgument(f"unknown compression {compression!r}")
        self.root = Path(root)
        self.compression = compression
        self.root.mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------ manifest

    def _manifest_path(self, table: str) -> Path:
        return self.root / table / "manifest.json"

    def _load_manifest(self, table: str) -> dict:
        path = self._manifest_path(table)
        if not path.exists():
            return {"table": table, "compression": self.compression, "partitions": {}}
        return json.loads(path.read_text())

    def _publish_manifest(self, table: str, manifest: dict):
        path = self._manifest_path(table)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(manifest, indent=1, sort_keys=True))
        os.replace(tmp, path)

    def partitions(self, table: str) -> list[str]:
        self._check_table(table)
        return sorted(self._load_manifest(table)["partitions"])

    def row_count(self, table: str) -> int:
        self._check_table(table)
        manifest = self._load_manifest(table)
        return sum(p["rows"] for p in manifest["partitions"].values())

    @staticmethod
    def _check_table(table: str):
        if table not in TABLE_KINDS:
            raise InvalidArgument(f"unknown table kind {table!r}")

    # ------------------------------------------------------------ column io

    def _write_column(self, directory: Path, name: str, values: np.ndarray):
        raw = np.ascontiguousarray(values).tobytes()
        if self.compression == "zlib":
            raw = zlib.compress(raw, level=1)
        # atomic replace: readers holding the old file keep a consistent view
        tmp = directory / f"{name}.bin.tmp"
        tmp.write_bytes(raw)
        os.replace(tmp, directory / f"{name}.bin")

    def _read_column(self, directory: Path, name: str, dtype, compression: str) -> np.ndarray:
        raw = (directory / f"{name}.bin").read_bytes()
        if compression == "zlib":
            raw = zlib.decompress(raw)
        return np.frombuffer(raw, dtype=dtype)

    @staticmethod
    def _write_dict(directory: Path, name: str, values: tuple[str, ...]):
        (directory / f"{name}.dict.json").write_text(json.dumps(list(values)))

    @staticmethod
    def _read_dict(directory: Path, name: str) -> tuple[str, ...]:
        return tuple(json.loads((directory / f"{name}.dict.json").read_text()))

    # ------------------------------------------------------------- ingest

    def ingest_csv(self, path: Path | str, table: str) -> IngestOutcome:
        """Parse, validate, route to day partitions and persist.

        Malformed rows abort with a line number; rows violating domain
        invariants are rejected, counted and skipped.
        """
        self._check_table(table)
        started = time.perf_counter()
        path = Path(path)
        rejected = 0
        samples: list[str] = []
        per_day: dict[int, list] = {}
        line = 2
        if table == "trades":
            for frame in csvio.read_trades_csv(path):
                keep, bad, notes = _validate_trades(frame, line)
                rejected += int(bad.sum())
                samples.extend(notes[: max(0, _REJECT_SAMPLES - len(samples))])
                self._route_days(frame, keep, per_day)
                line += len(frame)
        else:
            for frame in csvio.read_books_csv(path):
                keep, bad, notes = _validate_books(frame, line)
                rejected += int(bad.sum())
                samples.extend(notes[: max(0, _REJECT_SAMPLES - len(samples))])
                self._route_days(frame, keep, per_day)
                line += len(frame)

        manifest = self._load_manifest(table)
        created = 0
        rows_ingested = 0
        for day_index in sorted(per_day):
            frames = per_day[day_index]
            rows_ingested += sum(len(f) for f in frames)
            created += self._persist_partition(table, manifest, day_index, frames)
        self._publish_manifest(table, manifest)
        return IngestOutcome(
            table=table, partitions_created=created, rows_ingested=rows_ingested,
            rows_rejected=rejected, elapsed_s=time.perf_counter() - started,
            reject_samples=tuple(samples))

    @staticmethod
    def _route_days(frame, keep: np.ndarray, per_day: dict):
        kept = frame.take(np.nonzero(keep)[0]) if not keep.all() else frame
        if not len(kept):
            return
        days = kept.timestamp // NS_PER_DAY
        for day_index in np.unique(days):
            part = kept.take(np.nonzero(days == day_index)[0])
            per_day.setdefault(int(day_index), []).append(part)

    def _persist_partition(self, table: str, manifest: dict, day_index: int, frames) -> int:
        day_name = date.fromordinal(date(1970, 1, 1).toordinal() + day_index).isoformat()
        directory = self.root / table / day_name
        existing = manifest["partitions"].get(day_name)
        if existing is not None:
            frames = [self._load_partition(table, day_name)] + list(frames)
        merged = (concat_trades(frames) if table == "trades" else concat_books(frames))
        order = np.argsort(merged.timestamp, kind="stable")
        if (np.diff(order) != 1).any():
            merged = merged.take(order)
        directory.mkdir(parents=True, exist_ok=True)
        self._write_frame(directory, table, merged)
        manifest["partitions"][day_name] = {"rows": len(merged)}
        manifest["compression"] = self.compression
        return 0 if existing is not None else 1

    def _write_frame(self, directory: Path, table: str, frame):
        self._write_column(directory, "timestamp", frame.timestamp)
        self._write_column(directory, "exchange", frame.exchange_codes)
        self._write_dict(directory, "exchange", frame.exchange_values)
        self._write_column(directory, "symbol", frame.symbol_codes)
        self._write_dict(directory, "symbol", frame.symbol_values)
        if table == "trades":
            self._write_column(directory, "side", frame.side)
            self._write_column(directory, "price", frame.price)
            self._write_column(directory, "amount", frame.amount)
        else:
            for side, px, sz in (("b", frame.bid_price, frame.bid_size),
                                 ("a", frame.ask_price, frame.ask_size)):
                for level in range(MAX_BOOK_LEVELS):
                    self._write_column(directory, f"{side}{level + 1}price", px[:, level])
                    self._write_column(directory, f"{side}{level + 1}size", sz[:, level])

    # ------------------------------------------------------------- loading

    def _partition_dirs(self, table: str, range_: TimeRange | None) -> list[tuple[str, Path]]:
        manifest = self._load_manifest(table)
        out = []
        for day_name in sorted(manifest["partitions"]):
            if range_ is not None:
                day_start = (date.fromisoformat(day_name)
                             - date(1970, 1, 1)).days * NS_PER_DAY
                if day_start + NS_PER_DAY <= range_.begin or day_start >= range_.end:
                    continue
            out.append((day_name, self.root / table / day_name))
        return out

    def _load_partition(self, table: str, day_name: str,
                        plan: _ColumnPlan | None = None):
        directory = self.root / table / day_name
        manifest = self._load_manifest(table)
        compression = manifest.get("compression", "none")
        rows = manifest["partitions"][day_name]["rows"]
        ts = self._read_column(directory, "timestamp", np.int64, compression)
        symbol_codes = self._read_column(directory, "symbol", np.int32, compression)
        symbols = self._read_dict(directory, "symbol")
        full = plan is None
        if full or plan.need_exchange:
            exchange_codes = self._read_column(directory, "exchange", np.int32, compression)
            exchanges = self._read_dict(directory, "exchange")
        else:
            exchange_codes = np.zeros(rows, np.int32)
            exchanges = ("",)
        if table == "trades":
            def trade_col(name, dtype):
                if full or name in plan.trade_columns:
                    return self._read_column(directory, name, dtype, compression)
                return np.zeros(rows, dtype)
            return TradesFrame(ts, exchange_codes, exchanges, symbol_codes, symbols,
                               trade_col("side", np.int8), trade_col("price", np.int64),
                               trade_col("amount", np.int64))
        levels = MAX_BOOK_LEVELS if full else plan.book_levels

        def book_matrix(side: str, kind: str, loaded_levels: int) -> np.ndarray:
            matrix = np.zeros((rows, levels), np.int64)
            for level in range(loaded_levels):
                matrix[:, level] = self._read_column(
                    directory, f"{side}{level + 1}{kind}", np.int64, compression)
            return matrix

        return BooksFrame(
            ts, exchange_codes, exchanges, symbol_codes, symbols,
            book_matrix("b", "price", MAX_BOOK_LEVELS if full else plan.bid_px),
            book_matrix("b", "size", MAX_BOOK_LEVELS if full else plan.bid_sz),
            book_matrix("a", "price", MAX_BOOK_LEVELS if full else plan.ask_px),
            book_matrix("a", "size", MAX_BOOK_LEVELS if full else plan.ask_sz))

    def load_frame(self, table: str, range_: TimeRange | None = None,
                   plan: _ColumnPlan | None = None):
        """Concatenated frame of all partitions overlapping the range."""
        self._check_table(table)
        parts = [self._load_partition(table, day_name, plan)
                 for day_name, _ in self._partition_dirs(table, range_)]
        return concat_trades(parts) if table == "trades" else concat_books(parts)

    # ------------------------------------------------------------- queries

    def execute(self, spec: BenchmarkSpec, volatility_estimator: str = "sample",
                random_at: int | None = None,
                measure_scratch: bool = True) -> ExecuteOutcome:
        """Run one read benchmark over the stored partitions.

        server_elapsed_s covers data loading and computation, nothing else;
        peak_query_bytes is the high-water mark of allocations made while
        the query ran.
        """
        profile = spec.profile
        table = "trades" if profile.uses_trades else "books"
        if not self._partition_dirs(table, spec.range):
            raise NotFound(
                f"no {table} partitions overlap "
                f"[{spec.range.begin}, {spec.range.end}) for {spec.id}")
        plan = _column_plan(spec)
        was_tracing = tracemalloc.is_tracing()
        if measure_scratch and not was_tracing:
            tracemalloc.start()
        if measure_scratch:
            base_current, _ = tracemalloc.get_traced_memory()
            tracemalloc.reset_peak()
        started = time.perf_counter()
        try:
            if profile.uses_trades:
                trades = self.load_frame("trades", spec.range, plan)
                books = BooksFrame.empty(1)
            else:
                trades = TradesFrame.empty()
                books = self.load_frame("books", spec.range, plan)
            result = analytics.run_benchmark(
                spec, trades, books, volatility_estimator, random_at)
            elapsed = time.perf_counter() - started
            if measure_scratch:
                _, peak = tracemalloc.get_traced_memory()
                scratch = max(0, peak - base_current)
            else:
                scratch = 0
        finally:
            if measure_scratch and not was_tracing:
                tracemalloc.stop()
        return ExecuteOutcome(result, elapsed, scratch)

    # ------------------------------------------------------------- export

    def export_csv(self, table: str, range_: TimeRange, path: Path | str) -> int:
        """Write stored rows inside the range back to canonical CSV."""
        self._check_table(table)

        def frames():
            for day_name, _ in self._partition_dirs(table, range_):
                frame = self._load_partition(table, day_name)
                mask = (frame.timestamp >= range_.begin) & (frame.timestamp < range_.end)
                yield frame if mask.all() else frame.take(np.nonzero(mask)[0])

        try:
            if table == "trades":
                return csvio.write_trades_csv(Path(path), frames())
            return csvio.write_books_csv(Path(path), frames())
        except OSError as exc:
            raise TickbenchError(f"export to {path} failed: {exc}") from exc

    # ------------------------------------------------------------- storage

    def data_bytes(self, table: str | None = None) -> int:
        """Bytes the engine needs to answer queries: columns, dicts, manifests."""
        tables = TABLE_KINDS if table is None else (table,)
        total = 0
        for t in tables:
            base = self.root / t
            if not base.exists():
                continue
            for file in base.rglob("*"):
                if file.is_file():
                    total += file.stat().st_size
        return total

    def storage_report(self, table: str, source_file_bytes: int) -> StorageReport:
        self._check_table(table)
        if source_file_bytes <= 0:
            raise InvalidArgument("source_file_bytes must be > 0")
        data = self.data_bytes(table)
        return StorageReport(
            data_bytes_on_disk=data, source_file_bytes=source_file_bytes,
            efficiency_percent=100.0 * data / source_file_bytes)


def _validate_trades(frame: TradesFrame, line_base: int):
    bad_ts = frame.timestamp <= 0
    bad_price = frame.price <= 0
    bad_amount = frame.amount <= 0
    bad = bad_ts | bad_price | bad_amount
    notes = _sample_notes(line_base, ("timestamp <= 0", bad_ts),
                          ("price <= 0", bad_price), ("amount <= 0", bad_amount))
    return ~bad, bad, notes


def _validate_books(frame: BooksFrame, line_base: int):
    bad_ts = frame.timestamp <= 0
    half_present = np.zeros(len(frame), bool)
    gap = np.zeros(len(frame), bool)
    unsorted_side = np.zeros(len(frame), bool)
    for px, sz, ascending in ((frame.bid_price, frame.bid_size, False),
                              (frame.ask_price, frame.ask_size, True)):
        present_px = px > 0
        present_sz = sz > 0
        half_present |= (present_px != present_sz).any(axis=1)
        present = present_px
        gap |= (present[:, 1:] & ~present[:, :-1]).any(axis=1)
        diffs = np.diff(px, axis=1)
        both = present[:, 1:] & present[:, :-1]
        if ascending:
            unsorted_side |= (both & (diffs <= 0)).any(axis=1)
        else:
            unsorted_side |= (both & (diffs >= 0)).any(axis=1)
    two_sided = (frame.bid_price[:, 0] > 0) & (frame.ask_price[:, 0] > 0)
    crossed = two_sided & (frame.bid_price[:, 0] >= frame.ask_price[:, 0])
    bad = bad_ts | half_present | gap | unsorted_side | crossed
    notes = _sample_notes(
        line_base, ("timestamp <= 0", bad_ts),
        ("level with price xor size", half_present), ("gap in levels", gap),
        ("unsorted price levels", unsorted_side), ("crossed book", crossed))
    return ~bad, bad, notes


def _sample_notes(line_base: int, *reasons) -> list[str]:
    notes = []
    for reason, mask in reasons:
        hits = np.nonzero(mask)[0]
        for i in hits[:2]:
            notes.append(f"line {line_base + int(i)}: {reason}")
    return notes[:_REJECT_SAMPLES]
