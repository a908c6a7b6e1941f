"""Request/response models for the engine service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateRequest(BaseModel):
    seed: int = 0
    day: str = "2022-06-01"
    trades_rows: int = Field(default=1_000_000, ge=0)
    book_rows: int = Field(default=1_500_000, ge=0)
    exchanges: int = Field(default=1, ge=1)
    out_dir: str


class GeneratedFile(BaseModel):
    table: str
    path: str
    rows: int
    sha256: str


class GenerateResponse(BaseModel):
    files: list[GeneratedFile]


class IngestRequest(BaseModel):
    table: str
    path: str


class IngestResponse(BaseModel):
    table: str
    rows: int
    rejected: int
    partitions_created: int
    elapsed_s: float
    reject_samples: list[str]


class ExecuteRequest(BaseModel):
    query: str


class ExecuteResponse(BaseModel):
    columns: list[str]
    rows: list[list]
    server_elapsed_s: float
    query_storage_bytes: int


class StorageResponse(BaseModel):
    data_bytes: int
    per_table: dict[str, int]


class TableInfo(BaseModel):
    table: str
    rows: int
    partitions: list[str]


class TablesResponse(BaseModel):
    tables: list[TableInfo]


class BenchmarkInfo(BaseModel):
    id: str
    category: str
    description: str
    io_intensity: str
    compute_intensity: str


class BenchmarkListResponse(BaseModel):
    benchmarks: list[BenchmarkInfo]
