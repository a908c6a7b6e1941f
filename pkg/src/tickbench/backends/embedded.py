"""Adapter for the embedded columnar engine.

The embedded query language is a JSON document naming the benchmark and
its resolved parameters (the rendered form of the shipped `json` dialect
assets). Timestamps and widths are integer nanoseconds.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from ..engine.store import ColumnStore
from ..errors import BackendError, InvalidArgument, TickbenchError
from ..model import BenchmarkSpec, Side, TimeRange
from .base import BackendAdapter, BackendDescriptor, Capabilities, IngestStats, RawResult

_CAPS = Capabilities(
    reports_server_latency=True, reports_query_storage=True, reports_data_bytes=True)


def spec_from_document(doc: dict) -> tuple[BenchmarkSpec, str, int | None]:
    """(spec, volatility_estimator, random_at) from a parsed query document."""
    try:
        benchmark_id = doc["benchmark"]
        range_ = TimeRange(int(doc["range_begin"]), int(doc["range_end"]))
    except KeyError as exc:
        raise InvalidArgument(f"query document is missing {exc.args[0]!r}") from None
    random_at = int(doc["random_at"]) if "random_at" in doc else None
    side = Side.parse(doc["side"]) if "side" in doc else None
    spec = BenchmarkSpec(
        id=benchmark_id,
        range=range_,
        symbol=doc.get("symbol", "*"),
        inner_width=int(doc["inner_width"]) if "inner_width" in doc else None,
        outer_width=int(doc["outer_width"]) if "outer_width" in doc else None,
        side=side,
        depth_level=int(doc["depth_level"]) if "depth_level" in doc else None,
        rng_seed=(int(doc.get("rng_seed", 0))
                  if (benchmark_id == "O-T" or "rng_seed" in doc) else None),
    )
    return spec, doc.get("volatility_estimator", "sample"), random_at


class EmbeddedBackend(BackendAdapter):
    """The reference engine behind the uniform adapter contract."""

    def __init__(self, descriptor: BackendDescriptor, store: ColumnStore | None = None):
        super().__init__(descriptor)
        if store is None:
            root = descriptor.connection.get("root")
            if not root:
                raise BackendError(descriptor.id, "embedded backend needs a 'root' path")
            store = ColumnStore(Path(root),
                                descriptor.connection.get("compression", "none"))
        self.store = store

    @property
    def capabilities(self) -> Capabilities:
        return _CAPS

    def connect(self) -> None:
        pass

    def close(self) -> None:
        pass

    def ingest(self, csv_paths: Mapping[str, Path]) -> IngestStats:
        elapsed = 0.0
        rows = 0
        for table, path in csv_paths.items():
            try:
                outcome = self.store.ingest_csv(path, table)
            except TickbenchError as exc:
                raise BackendError(
                    self.id, f"ingest of {path} failed after {rows} rows: {exc}") from exc
            elapsed += outcome.elapsed_s
            rows += outcome.rows_ingested
        return IngestStats(elapsed_s=elapsed, rows=rows)

    def execute(self, query: str) -> RawResult:
        try:
            doc = json.loads(query)
        except json.JSONDecodeError as exc:
            raise BackendError(self.id, f"query is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise BackendError(self.id, "query document must be a JSON object")
        try:
            spec, estimator, random_at = spec_from_document(doc)
            outcome = self.store.execute(spec, estimator, random_at)
        except TickbenchError as exc:
            raise BackendError(self.id, str(exc)) from exc
        return RawResult(
            columns=outcome.table.column_names,
            rows=outcome.table.rows,
            server_elapsed_s=outcome.server_elapsed_s,
            query_storage_bytes=outcome.peak_query_bytes)

    def data_bytes(self) -> int:
        return self.store.data_bytes()

    def rows_stored(self) -> int:
        return self.store.row_count("trades") + self.store.row_count("books")
