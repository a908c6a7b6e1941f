"""Embedded columnar engine: CSV ingest/export, day partitions, benchmarks."""

from .store import ColumnStore, ExecuteOutcome, IngestOutcome, StorageReport

__all__ = ["ColumnStore", "ExecuteOutcome", "IngestOutcome", "StorageReport"]
