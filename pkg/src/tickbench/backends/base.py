"""Uniform adapter contract for query backends.

An adapter speaks one system's wire protocol and exposes ingest, query
execution and storage accounting behind a single interface, so the harness
can drive the embedded engine and external servers identically. Optional
capabilities are flagged, never probed by trial and error.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..errors import CapabilityUnsupported


@dataclass(frozen=True)
class Capabilities:
    reports_server_latency: bool = False
    reports_query_storage: bool = False
    reports_data_bytes: bool = False


@dataclass(frozen=True)
class BackendDescriptor:
    """Connection recipe for one backend in a run configuration."""

    id: str
    kind: str
    connection: Mapping[str, str] = field(default_factory=dict)
    asset_dir: Path | None = None


@dataclass(frozen=True)
class IngestStats:
    elapsed_s: float
    rows: int


@dataclass(frozen=True)
class RawResult:
    """Rows as returned by a backend, before normalization."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    server_elapsed_s: float | None = None
    query_storage_bytes: int | None = None


class BackendAdapter(ABC):
    """One connected backend; not required to be thread-safe."""

    def __init__(self, descriptor: BackendDescriptor):
        self.descriptor = descriptor

    @property
    def id(self) -> str:
        return self.descriptor.id

    @property
    @abstractmethod
    def capabilities(self) -> Capabilities: ...

    @abstractmethod
    def connect(self) -> None: ...

    @abstractmethod
    def close(self) -> None: ...

    @abstractmethod
    def ingest(self, csv_paths: Mapping[str, Path]) -> IngestStats:
        """Load CSV files per table kind; elapsed ends when rows are queryable."""

    @abstractmethod
    def execute(self, query: str) -> RawResult:
        """Run one rendered query text."""

    def data_bytes(self) -> int:
        """On-disk dataset size, for storage-efficiency runs."""
        raise CapabilityUnsupported(self.id, "backend does not report data bytes")

    def rows_stored(self) -> int | None:
        """Total stored rows, or None when the backend cannot tell."""
        return None

    def __enter__(self):
        self.connect()
        return self

    def __exit__(self, *exc):
        self.close()
