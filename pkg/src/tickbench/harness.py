"""Benchmark runner: cache clearing, repeated measurement, consistency gating.

The protocol per benchmark is: clear the cache (external command hook),
execute, record latency; repeat N times; then normalize the final result
and compare it against the embedded reference. Latency comes from the
backend's own timer when it reports one, otherwise from a monotonic wall
clock around the execute call. A backend result that disagrees with the
reference is retained but marked, and the run as a whole fails the
consistency gate.
"""

from __future__ import annotations

import csv as csv_module
import json
import math
import subprocess
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .backends import BackendAdapter, asset_dir_for, compare, load_asset, normalize, render
from .backends.normalize import ConsistencyVerdict
from .engine.store import ColumnStore, StorageReport
from .errors import CapabilityUnsupported, HarnessError, InvalidArgument, TickbenchError
from .model import BENCHMARK_PROFILES, BenchmarkSpec, Category, ResultTable

MB = 10**6


@dataclass(frozen=True)
class RunPlan:
    backend_id: str
    specs: tuple[BenchmarkSpec, ...]
    repetitions: int = 10
    cache_clear_command: str | None = None
    warm_up: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidArgument("repetitions must be >= 1")


@dataclass(frozen=True)
class BenchmarkResult:
    benchmark_id: str
    backend_id: str
    latencies_ms: tuple[float, ...]
    mean_latency_ms: float
    latency_source: str  # server_reported | harness_wall_clock
    query_storage_bytes: int | None
    result_digest: str
    consistent: bool
    consistency_detail: str | None

    @property
    def category(self) -> str:
        return BENCHMARK_PROFILES[self.benchmark_id].category.value


@dataclass(frozen=True)
class IngestResult:
    backend_id: str
    elapsed_ms: float
    rows: int
    source_bytes: int
    throughput_mb_s: float


def clear_cache(command: str | None):
    """Run the configured cache-clear hook; nonzero exit aborts the benchmark."""
    if not command or command == "none":
        return
    proc = subprocess.run(command, shell=True, capture_output=True, text=True)
    if proc.returncode != 0:
        raise HarnessError(
            f"cache clear command failed with exit {proc.returncode}: "
            f"{command!r}\nstdout: {proc.stdout}\nstderr: {proc.stderr}")


class Harness:
    """Drives one backend at a time against the embedded reference."""

    def __init__(self, reference: ColumnStore, adapters: Mapping[str, BackendAdapter]):
        self.reference = reference
        self.adapters = dict(adapters)

    def _adapter(self, backend_id: str) -> BackendAdapter:
        try:
            return self.adapters[backend_id]
        except KeyError:
            raise HarnessError(
                f"no backend {backend_id!r} configured; "
                f"known: {', '.join(sorted(self.adapters)) or 'none'}") from None

    def reference_result(self, spec: BenchmarkSpec) -> ResultTable:
        outcome = self.reference.execute(spec, measure_scratch=False)
        return normalize(outcome.table, spec.id)

    def run(self, plan: RunPlan) -> list[BenchmarkResult]:
        adapter = self._adapter(plan.backend_id)
        asset_dir = asset_dir_for(adapter.descriptor)
        results = []
        for spec in plan.specs:
            results.append(self._run_one(adapter, asset_dir, spec, plan))
        return results

    def _run_one(self, adapter: BackendAdapter, asset_dir, spec: BenchmarkSpec,
                 plan: RunPlan) -> BenchmarkResult:
        query = render(load_asset(asset_dir, spec.id), spec)
        server_latency = adapter.capabilities.reports_server_latency
        if plan.warm_up:
            adapter.execute(query)
        latencies: list[float] = []
        digests: list[str] = []
        normalized: ResultTable | None = None
        storage: int | None = None
        for _ in range(plan.repetitions):
            clear_cache(plan.cache_clear_command)
            started = time.perf_counter()
            raw = adapter.execute(query)
            wall = time.perf_counter() - started
            if server_latency and raw.server_elapsed_s is not None:
                latencies.append(raw.server_elapsed_s * 1000.0)
                source = "server_reported"
            else:
                latencies.append(wall * 1000.0)
                source = "harness_wall_clock"
            if raw.query_storage_bytes is not None:
                storage = max(storage or 0, raw.query_storage_bytes)
            normalized = normalize(raw, spec.id)
            digests.append(normalized.digest())
        if len(set(digests)) != 1:
            verdict = ConsistencyVerdict(
                False, f"nondeterministic results across repetitions: {sorted(set(digests))}")
        else:
            verdict = compare(normalized, self.reference_result(spec), spec.id)
        mean = math.fsum(latencies) / len(latencies)
        if not adapter.capabilities.reports_query_storage:
            storage = None
        return BenchmarkResult(
            benchmark_id=spec.id, backend_id=adapter.id,
            latencies_ms=tuple(latencies), mean_latency_ms=mean,
            latency_source=source, query_storage_bytes=storage,
            result_digest=digests[-1], consistent=verdict.equal,
            consistency_detail=verdict.detail)

    def verify(self, backend_id: str, specs: Sequence[BenchmarkSpec]) -> list[tuple[str, ConsistencyVerdict]]:
        """One comparison per benchmark between a backend and the reference."""
        adapter = self._adapter(backend_id)
        asset_dir = asset_dir_for(adapter.descriptor)
        verdicts = []
        for spec in specs:
            query = render(load_asset(asset_dir, spec.id), spec)
            got = normalize(adapter.execute(query), spec.id)
            verdicts.append((spec.id, compare(got, self.reference_result(spec), spec.id)))
        return verdicts


def run_ingest_benchmark(adapter: BackendAdapter, csv_paths: Mapping[str, Path]) -> IngestResult:
    """Bulk-write benchmark: fresh tables, load both files, derive throughput."""
    stored = adapter.rows_stored()
    if stored:
        raise HarnessError(
            f"backend {adapter.id} already holds {stored} rows; "
            "the write benchmark requires fresh tables")
    source_bytes = 0
    for table, path in csv_paths.items():
        path = Path(path)
        if not path.exists():
            raise HarnessError(f"missing {table} file: {path}")
        source_bytes += path.stat().st_size
    stats = adapter.ingest(csv_paths)
    throughput = (source_bytes / MB) / stats.elapsed_s if stats.elapsed_s > 0 else 0.0
    return IngestResult(
        backend_id=adapter.id, elapsed_ms=stats.elapsed_s * 1000.0,
        rows=stats.rows, source_bytes=source_bytes, throughput_mb_s=throughput)


def run_storage_benchmark(adapter: BackendAdapter, source_file_bytes: int) -> StorageReport | None:
    """Storage-efficiency benchmark; None when the backend cannot report it."""
    if source_file_bytes <= 0:
        raise InvalidArgument("source_file_bytes must be > 0")
    if not adapter.capabilities.reports_data_bytes:
        return None
    try:
        data = adapter.data_bytes()
    except CapabilityUnsupported:
        return None
    return StorageReport(
        data_bytes_on_disk=data, source_file_bytes=source_file_bytes,
        efficiency_percent=100.0 * data / source_file_bytes)


# ------------------------------------------------------------------ reports

_CATEGORY_ORDER = [c.value for c in Category]
_ID_ORDER = {bid: i for i, bid in enumerate(BENCHMARK_PROFILES)}


def _result_sort_key(result: BenchmarkResult):
    return (_CATEGORY_ORDER.index(result.category), _ID_ORDER[result.benchmark_id],
            result.backend_id)


def results_to_json(results: Sequence[BenchmarkResult]) -> str:
    return json.dumps({"results": [asdict(r) for r in results]}, indent=1)


def results_from_json(text: str) -> list[BenchmarkResult]:
    try:
        doc = json.loads(text)
        return [
            BenchmarkResult(
                benchmark_id=r["benchmark_id"], backend_id=r["backend_id"],
                latencies_ms=tuple(r["latencies_ms"]),
                mean_latency_ms=r["mean_latency_ms"],
                latency_source=r["latency_source"],
                query_storage_bytes=r["query_storage_bytes"],
                result_digest=r["result_digest"], consistent=r["consistent"],
                consistency_detail=r["consistency_detail"])
            for r in doc["results"]
        ]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise TickbenchError(f"malformed results file: {exc}") from exc


def emit_report(results: Sequence[BenchmarkResult], fmt: str, path: Path | str) -> list[Path]:
    """Write results as json, csv, or per-category plotdata series files."""
    if not results:
        raise InvalidArgument("no results to report")
    path = Path(path)
    ordered = sorted(results, key=_result_sort_key)
    if fmt == "json":
        path.write_text(results_to_json(ordered))
        return [path]
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv_module.writer(fh)
            writer.writerow(["category", "benchmark_id", "backend_id", "mean_latency_ms",
                             "latency_source", "query_storage_bytes", "consistent"])
            for r in ordered:
                writer.writerow([
                    r.category, r.benchmark_id, r.backend_id,
                    repr(r.mean_latency_ms), r.latency_source,
                    "" if r.query_storage_bytes is None else r.query_storage_bytes,
                    "true" if r.consistent else "false"])
        return [path]
    if fmt == "plotdata":
        path.mkdir(parents=True, exist_ok=True)
        written = []
        for category in _CATEGORY_ORDER:
            rows = [r for r in ordered if r.category == category]
            if not rows:
                continue
            series = path / f"{category.lower()}.dat"
            with open(series, "w") as fh:
                fh.write("# benchmark backend mean_latency_ms\n")
                for r in rows:
                    fh.write(f"{r.benchmark_id} {r.backend_id} {r.mean_latency_ms!r}\n")
            written.append(series)
        return written
    raise InvalidArgument(f"unknown report format {fmt!r}")


def load_plan_file(path: Path | str, specs_by_id: Mapping[str, BenchmarkSpec]) -> RunPlan:
    """Parse the key-value plan format ([plan] section, comma-separated ids)."""
    import configparser

    parser = configparser.ConfigParser()
    read = parser.read(Path(path))
    if not read or "plan" not in parser:
        raise TickbenchError(f"plan file {path} is missing its [plan] section")
    section = parser["plan"]
    backend = section.get("backend", "embedded")
    names = [b.strip() for b in section.get("benchmarks", "all").split(",")]
    if names == ["all"]:
        specs = tuple(specs_by_id.values())
    else:
        missing = [b for b in names if b not in specs_by_id]
        if missing:
            raise TickbenchError(f"unknown benchmark ids in plan: {', '.join(missing)}")
        specs = tuple(specs_by_id[b] for b in names)
    return RunPlan(
        backend_id=backend, specs=specs,
        repetitions=section.getint("repetitions", 10),
        cache_clear_command=section.get("cache_clear_command", "none"),
        warm_up=section.getboolean("warm_up", False))
