"""Adapter speaking the toolkit's HTTP service protocol.

The service (tickbench.service) hosts an embedded engine behind JSON
endpoints; this adapter makes it look like any other backend, which also
exercises the full render/wire/normalize path end to end in tests.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import httpx

from ..errors import BackendError
from .base import BackendAdapter, BackendDescriptor, Capabilities, IngestStats, RawResult

_CAPS = Capabilities(
    reports_server_latency=True, reports_query_storage=True, reports_data_bytes=True)


class HttpBackend(BackendAdapter):
    """Client for a tickbench engine service."""

    def __init__(self, descriptor: BackendDescriptor, client: httpx.Client | None = None):
        super().__init__(descriptor)
        self._client = client
        self._owns_client = client is None

    @property
    def capabilities(self) -> Capabilities:
        return _CAPS

    def connect(self) -> None:
        if self._client is None:
            base_url = self.descriptor.connection.get("base_url")
            if not base_url:
                raise BackendError(self.id, "http backend needs a 'base_url'")
            self._client = httpx.Client(base_url=base_url, timeout=600.0)

    def close(self) -> None:
        if self._client is not None and self._owns_client:
            self._client.close()
        self._client = None

    def _request(self, method: str, url: str, **kwargs) -> dict:
        if self._client is None:
            raise BackendError(self.id, "not connected")
        try:
            response = self._client.request(method, url, **kwargs)
        except httpx.HTTPError as exc:
            raise BackendError(self.id, f"{method} {url}: {exc}") from None
        if response.status_code >= 400:
            detail = response.text
            try:
                detail = response.json().get("detail", detail)
            except ValueError:
                pass
            raise BackendError(self.id, f"{method} {url} -> {response.status_code}: {detail}")
        return response.json()

    def ingest(self, csv_paths: Mapping[str, Path]) -> IngestStats:
        elapsed = 0.0
        rows = 0
        for table, path in csv_paths.items():
            body = self._request("POST", "/ingest",
                                 json={"table": table, "path": str(path)})
            elapsed += body["elapsed_s"]
            rows += body["rows"]
        return IngestStats(elapsed_s=elapsed, rows=rows)

    def execute(self, query: str) -> RawResult:
        body = self._request("POST", "/execute", json={"query": query})
        return RawResult(
            columns=tuple(body["columns"]),
            rows=tuple(tuple(row) for row in body["rows"]),
            server_elapsed_s=body.get("server_elapsed_s"),
            query_storage_bytes=body.get("query_storage_bytes"))

    def data_bytes(self) -> int:
        return self._request("GET", "/storage")["data_bytes"]

    def rows_stored(self) -> int:
        tables = self._request("GET", "/tables")["tables"]
        return sum(t["rows"] for t in tables)
