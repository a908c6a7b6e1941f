"""HTTP facade over the embedded engine.

Hosts one column store the way the benchmarked database servers are
hosted: ingest from server-local CSV files, execute rendered JSON query
documents, report storage. The CLI and the HttpBackend adapter are its
clients. Decimal cells serialize as strings so results stay exact on the
wire.
"""

from __future__ import annotations

import hashlib
from datetime import date
from decimal import Decimal
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..datagen import (
    GeneratorConfig,
    generate_trades,
    iter_book_chunks,
    multi_exchange_config,
)
from ..engine.csvio import write_books_csv, write_trades_csv
from ..engine.store import TABLE_KINDS, ColumnStore
from ..errors import CsvFormatError, InvalidArgument, NotFound, TickbenchError
from ..model import BENCHMARK_PROFILES
from ..backends.embedded import spec_from_document
from . import schemas


def _json_cell(value):
    if isinstance(value, Decimal):
        return str(value)
    return value


def create_app(root: Path | str, compression: str = "none") -> FastAPI:
    store = ColumnStore(Path(root), compression)
    app = FastAPI(title="tickbench engine service", version=__version__)
    app.state.store = store

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/benchmarks", response_model=schemas.BenchmarkListResponse)
    def benchmarks():
        return schemas.BenchmarkListResponse(benchmarks=[
            schemas.BenchmarkInfo(
                id=bid, category=profile.category.value, description=profile.description,
                io_intensity=profile.io_intensity,
                compute_intensity=profile.compute_intensity)
            for bid, profile in BENCHMARK_PROFILES.items()
        ])

    @app.post("/datasets/generate", response_model=schemas.GenerateResponse)
    def generate(request: schemas.GenerateRequest):
        out_dir = Path(request.out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            config = GeneratorConfig(
                seed=request.seed, day=date.fromisoformat(request.day),
                trades_rows=request.trades_rows, book_rows=request.book_rows)
            files = []
            trades_path = out_dir / "trades.csv"
            rows = write_trades_csv(trades_path, [generate_trades(config)])
            files.append(_file_info("trades", trades_path, rows))
            books_path = out_dir / "books.csv"
            if request.exchanges > 1:
                config = multi_exchange_config(config, request.exchanges)
            rows = write_books_csv(books_path, iter_book_chunks(config))
            files.append(_file_info("books", books_path, rows))
        except (TickbenchError, ValueError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.GenerateResponse(files=files)

    @app.post("/ingest", response_model=schemas.IngestResponse)
    def ingest(request: schemas.IngestRequest):
        try:
            outcome = store.ingest_csv(Path(request.path), request.table)
        except CsvFormatError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except TickbenchError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.IngestResponse(
            table=request.table, rows=outcome.rows_ingested,
            rejected=outcome.rows_rejected,
            partitions_created=outcome.partitions_created,
            elapsed_s=outcome.elapsed_s,
            reject_samples=list(outcome.reject_samples))

    @app.post("/execute", response_model=schemas.ExecuteResponse)
    def execute(request: schemas.ExecuteRequest):
        import json as json_module

        try:
            doc = json_module.loads(request.query)
            if not isinstance(doc, dict):
                raise InvalidArgument("query document must be a JSON object")
            spec, estimator, random_at = spec_from_document(doc)
            outcome = store.execute(spec, estimator, random_at)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except (TickbenchError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.ExecuteResponse(
            columns=list(outcome.table.column_names),
            rows=[[_json_cell(v) for v in row] for row in outcome.table.rows],
            server_elapsed_s=outcome.server_elapsed_s,
            query_storage_bytes=outcome.peak_query_bytes)

    @app.get("/storage", response_model=schemas.StorageResponse)
    def storage():
        per_table = {table: store.data_bytes(table) for table in TABLE_KINDS}
        return schemas.StorageResponse(
            data_bytes=sum(per_table.values()), per_table=per_table)

    @app.get("/tables", response_model=schemas.TablesResponse)
    def tables():
        return schemas.TablesResponse(tables=[
            schemas.TableInfo(table=table, rows=store.row_count(table),
                              partitions=store.partitions(table))
            for table in TABLE_KINDS
        ])

    return app


def _file_info(table: str, path: Path, rows: int) -> "schemas.GeneratedFile":
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return schemas.GeneratedFile(
        table=table, path=str(path), rows=rows, sha256=digest.hexdigest())


__all__ = ["create_app"]
