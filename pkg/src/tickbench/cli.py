"""Command-line surface: generate, ingest, run, verify, report, serve.

Machine-readable output goes to stdout as JSON lines; diagnostics go to
stderr. Exit codes: 0 success and all results consistent, 2 consistency
failures, 1 operational errors.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import sys
from datetime import date
from pathlib import Path

import click

from . import __version__
from .backends import BackendDescriptor, create_adapter
from .datagen import (
    GeneratorConfig,
    generate_trades,
    iter_book_chunks,
    multi_exchange_config,
)
from .engine.csvio import write_books_csv, write_trades_csv
from .engine.store import ColumnStore
from .errors import TickbenchError
from .harness import (
    Harness,
    RunPlan,
    emit_report,
    results_from_json,
    run_ingest_benchmark,
    run_storage_benchmark,
)
from .model import BENCHMARK_PROFILES, READ_BENCHMARK_IDS, default_specs

DEFAULT_ROOT = "./tickbench-data"
CONFIG_ENV = "TICKBENCH_CONFIG"

_BENCHMARK_HELP = "\b\nBenchmark ids:\n" + "\n".join(
    f"  {bid:7s} {profile.description}"
    for bid, profile in BENCHMARK_PROFILES.items())


def _echo_json(payload: dict):
    click.echo(json.dumps(payload, default=str))


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(config_path: str | None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    path = config_path or os.environ.get(CONFIG_ENV)
    if path:
        if not Path(path).exists():
            _fail(f"config file not found: {path}")
        parser.read(path)
    return parser


def _descriptor(config: configparser.ConfigParser, backend_id: str) -> BackendDescriptor:
    if config.has_section(backend_id):
        section = dict(config[backend_id])
    elif backend_id == "embedded":
        section = {}
    else:
        _fail(f"backend {backend_id!r} is not configured; add a [{backend_id}] section")
    kind = section.pop("kind", "embedded" if backend_id == "embedded" else None)
    if kind is None:
        _fail(f"backend {backend_id!r} config needs a 'kind' (embedded or http)")
    asset_dir = section.pop("asset_dir", None)
    if kind == "embedded":
        section.setdefault("root", DEFAULT_ROOT)
    return BackendDescriptor(
        id=backend_id, kind=kind, connection=section,
        asset_dir=Path(asset_dir) if asset_dir else None)


def _embedded_store(config: configparser.ConfigParser) -> ColumnStore:
    descriptor = _descriptor(config, "embedded")
    return ColumnStore(Path(descriptor.connection.get("root", DEFAULT_ROOT)),
                       descriptor.connection.get("compression", "none"))


def _dataset_specs(store: ColumnStore, rng_seed: int = 1):
    days = store.partitions("trades") + store.partitions("books")
    if not days:
        _fail("no data ingested into the embedded engine; run `tickbench ingest` first")
    anchor = date.fromisoformat(min(days))
    return default_specs(anchor, rng_seed=rng_seed)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


@click.group()
@click.version_option(__version__)
def main():
    """Benchmarking toolkit for time-series databases under market-data workloads."""


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--day", type=str, default="2022-06-01", show_default=True)
@click.option("--trades-rows", type=int, default=1_000_000, show_default=True)
@click.option("--book-rows", type=int, default=1_500_000, show_default=True)
@click.option("--exchanges", type=int, default=1, show_default=True,
              help="Spread book snapshots over EX1..EXn with independent walks.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def generate(seed, day, trades_rows, book_rows, exchanges, out_dir):
    """Write a deterministic synthetic day of trades.csv and books.csv."""
    try:
        anchor = date.fromisoformat(day)
    except ValueError as exc:
        _fail(f"bad --day: {exc}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        config = GeneratorConfig(seed=seed, day=anchor,
                                 trades_rows=trades_rows, book_rows=book_rows)
        trades_path = out / "trades.csv"
        rows = write_trades_csv(trades_path, [generate_trades(config)])
        _echo_json({"file": str(trades_path), "table": "trades", "rows": rows,
                    "sha256": _sha256(trades_path)})
        books_path = out / "books.csv"
        if exchanges > 1:
            config = multi_exchange_config(config, exchanges)
        rows = write_books_csv(books_path, iter_book_chunks(config))
        _echo_json({"file": str(books_path), "table": "books", "rows": rows,
                    "sha256": _sha256(books_path)})
    except (TickbenchError, OSError) as exc:
        _fail(str(exc))


@main.command()
@click.option("--backend", "backend_id", default="embedded", show_default=True)
@click.option("--data", "data_dir", type=click.Path(file_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help=f"INI config (or ${CONFIG_ENV}).")
def ingest(backend_id, data_dir, config_path):
    """Run the bulk-write benchmark: load trades.csv and books.csv."""
    config = _load_config(config_path)
    data = Path(data_dir)
    paths = {"trades": data / "trades.csv", "books": data / "books.csv"}
    for table, path in paths.items():
        if not path.exists():
            _fail(f"missing {table} file: {path}")
    try:
        adapter = create_adapter(_descriptor(config, backend_id))
        with adapter:
            result = run_ingest_benchmark(adapter, paths)
            _echo_json({"benchmark": "W", "backend": backend_id,
                        "elapsed_ms": result.elapsed_ms, "rows": result.rows,
                        "source_bytes": result.source_bytes,
                        "throughput_mb_s": result.throughput_mb_s})
            report = run_storage_benchmark(adapter, result.source_bytes)
            if report is None:
                _echo_json({"benchmark": "SE", "backend": backend_id,
                            "supported": False})
            else:
                _echo_json({"benchmark": "SE", "backend": backend_id,
                            "data_bytes": report.data_bytes_on_disk,
                            "source_bytes": report.source_file_bytes,
                            "efficiency_percent": report.efficiency_percent})
    except TickbenchError as exc:
        _fail(str(exc))


def _parse_benchmarks(benchmarks: str) -> list[str]:
    if benchmarks == "all":
        return list(READ_BENCHMARK_IDS)
    ids = [b.strip() for b in benchmarks.split(",") if b.strip()]
    unknown = [b for b in ids if b not in READ_BENCHMARK_IDS]
    if unknown:
        _fail(f"unknown benchmark ids: {', '.join(unknown)}; "
              f"valid: {', '.join(READ_BENCHMARK_IDS)}")
    return ids


@main.command(epilog=_BENCHMARK_HELP)
@click.option("--backend", "backend_id", default="embedded", show_default=True)
@click.option("--benchmarks", default="all", show_default=True,
              help="Comma-separated benchmark ids, or 'all'.")
@click.option("--reps", type=int, default=10, show_default=True)
@click.option("--cache-clear-cmd", default="none", show_default=True,
              help="Shell command run before every execution; 'none' disables.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the full JSON report here.")
@click.option("--warm-up", is_flag=True, default=False)
@click.option("--rng-seed", type=int, default=1, show_default=True,
              help="Seed for the O-T random instant.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
def run(backend_id, benchmarks, reps, cache_clear_cmd, out_path, warm_up, rng_seed,
        config_path):
    """Measure read benchmarks under the repeat/cache-clear protocol."""
    config = _load_config(config_path)
    ids = _parse_benchmarks(benchmarks)
    try:
        store = _embedded_store(config)
        specs_by_id = _dataset_specs(store, rng_seed=rng_seed)
        adapter = create_adapter(_descriptor(config, backend_id))
        with adapter:
            harness = Harness(store, {backend_id: adapter})
            plan = RunPlan(
                backend_id=backend_id,
                specs=tuple(specs_by_id[b] for b in ids),
                repetitions=reps,
                cache_clear_command=None if cache_clear_cmd == "none" else cache_clear_cmd,
                warm_up=warm_up)
            results = harness.run(plan)
    except TickbenchError as exc:
        _fail(str(exc))
    for result in results:
        _echo_json({
            "benchmark": result.benchmark_id, "backend": result.backend_id,
            "mean_latency_ms": result.mean_latency_ms,
            "latency_source": result.latency_source,
            "latencies_ms": list(result.latencies_ms),
            "query_storage_bytes": result.query_storage_bytes,
            "consistent": result.consistent,
            "detail": result.consistency_detail})
    if out_path:
        emit_report(results, "json", out_path)
        click.echo(f"report written to {out_path}", err=True)
    if not all(r.consistent for r in results):
        bad = [r.benchmark_id for r in results if not r.consistent]
        click.echo(f"consistency failures: {', '.join(bad)}", err=True)
        sys.exit(2)


@main.command(epilog=_BENCHMARK_HELP)
@click.option("--backend", "backend_id", required=True)
@click.option("--against", default="embedded", show_default=True,
              help="Reference backend; only 'embedded' is supported.")
@click.option("--benchmarks", default="all", show_default=True)
@click.option("--rng-seed", type=int, default=1, show_default=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
def verify(backend_id, against, benchmarks, rng_seed, config_path):
    """Compare every read benchmark against the embedded reference."""
    if against != "embedded":
        _fail("only --against embedded is supported")
    config = _load_config(config_path)
    ids = _parse_benchmarks(benchmarks)
    try:
        store = _embedded_store(config)
        specs_by_id = _dataset_specs(store, rng_seed=rng_seed)
        adapter = create_adapter(_descriptor(config, backend_id))
        with adapter:
            harness = Harness(store, {backend_id: adapter})
            verdicts = harness.verify(backend_id, [specs_by_id[b] for b in ids])
    except TickbenchError as exc:
        _fail(str(exc))
    mismatches = 0
    for benchmark_id, verdict in verdicts:
        _echo_json({"benchmark": benchmark_id, "equal": verdict.equal,
                    "detail": verdict.detail})
        mismatches += 0 if verdict.equal else 1
    if mismatches:
        click.echo(f"{mismatches} benchmark(s) inconsistent", err=True)
        sys.exit(2)


@main.command()
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "plotdata"]), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def report(in_path, fmt, out_path):
    """Convert a results JSON file to CSV or plotdata series."""
    try:
        results = results_from_json(Path(in_path).read_text())
        written = emit_report(results, fmt, out_path)
    except FileNotFoundError:
        _fail(f"results file not found: {in_path}")
    except TickbenchError as exc:
        _fail(str(exc))
    for path in written:
        _echo_json({"written": str(path)})


@main.command()
@click.option("--root", type=click.Path(file_okay=False), default=DEFAULT_ROOT,
              show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8300, show_default=True)
@click.option("--compression", type=click.Choice(["none", "zlib"]), default="none",
              show_default=True)
def serve(root, host, port, compression):
    """Host the embedded engine as an HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(Path(root), compression), host=host, port=port)


if __name__ == "__main__":
    main()
