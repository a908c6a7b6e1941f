"""Query-asset templates and placeholder rendering.

An asset is a text file per benchmark in a backend's native language, with
`{{placeholder}}` markers for the spec parameters. Rendering substitutes
dialect-specific literal syntax (SQL timestamps, Flux durations, q
literals, JSON for the embedded engine) and refuses to leave anything
unresolved.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .. import analytics
from ..errors import ConfigurationError
from ..model import NS_PER_SEC, BenchmarkSpec

PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")
DIALECTS = ("json", "sql-timescale", "sql-clickhouse", "flux", "q")

_UNITS = (
    (86_400 * NS_PER_SEC, "day", "d", "DAY"),
    (3_600 * NS_PER_SEC, "hour", "h", "HOUR"),
    (60 * NS_PER_SEC, "minute", "m", "MINUTE"),
    (NS_PER_SEC, "second", "s", "SECOND"),
    (1_000_000, "millisecond", "ms", "MILLISECOND"),
)


@dataclass(frozen=True)
class QueryAsset:
    benchmark_id: str
    template_text: str
    dialect: str


def builtin_asset_dir(backend_kind: str) -> Path:
    """Directory of the templates shipped with the package."""
    base = resources.files("tickbench") / "assets" / backend_kind
    path = Path(str(base))
    if not path.is_dir():
        raise ConfigurationError(f"no built-in assets for backend kind {backend_kind!r}")
    return path


def load_asset(asset_dir: Path | str, benchmark_id: str) -> QueryAsset:
    asset_dir = Path(asset_dir)
    dialect_file = asset_dir / "dialect"
    if not dialect_file.exists():
        raise ConfigurationError(f"asset directory {asset_dir} has no dialect marker")
    dialect = dialect_file.read_text().strip()
    if dialect not in DIALECTS:
        raise ConfigurationError(f"unknown asset dialect {dialect!r} in {asset_dir}")
    template = asset_dir / f"{benchmark_id}.tpl"
    if not template.exists():
        raise ConfigurationError(f"no query asset for {benchmark_id} in {asset_dir}")
    return QueryAsset(benchmark_id, template.read_text(), dialect)


def _split_width(ns: int) -> tuple[int, str, str, str]:
    for unit_ns, singular, flux, sql_upper in _UNITS:
        if ns % unit_ns == 0:
            count = ns // unit_ns
            return count, singular, flux, sql_upper
    return ns, "nanosecond", "ns", "NANOSECOND"


def _sql_timestamp(ns: int) -> str:
    dt = datetime.fromtimestamp(ns // NS_PER_SEC, tz=timezone.utc)
    text = dt.strftime("%Y-%m-%d %H:%M:%S")
    frac = ns % NS_PER_SEC
    if frac:
        text += f".{frac:09d}"
    return text


def _flux_timestamp(ns: int) -> str:
    dt = datetime.fromtimestamp(ns // NS_PER_SEC, tz=timezone.utc)
    frac = ns % NS_PER_SEC
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    return f"{base}.{frac:09d}Z" if frac else f"{base}Z"


def _q_timestamp(ns: int) -> str:
    dt = datetime.fromtimestamp(ns // NS_PER_SEC, tz=timezone.utc)
    return dt.strftime("%Y.%m.%dD%H:%M:%S.") + f"{ns % NS_PER_SEC:09d}"


def _width_literal(ns: int, dialect: str) -> str:
    count, singular, flux, sql_upper = _split_width(ns)
    if dialect == "json":
        return str(ns)
    if dialect == "sql-timescale":
        plural = singular if count == 1 else singular + "s"
        return f"'{count} {plural}'"
    if dialect == "sql-clickhouse":
        return f"INTERVAL {count} {sql_upper}"
    if dialect == "flux":
        return f"{count}{flux}"
    if dialect == "q":
        seconds, sub = divmod(ns, NS_PER_SEC)
        hh, rem = divmod(seconds, 3600)
        mm, ss = divmod(rem, 60)
        return f"0D{hh:02d}:{mm:02d}:{ss:02d}.{sub:09d}"
    raise ConfigurationError(f"unknown dialect {dialect!r}")


def _ts_literal(ns: int, dialect: str) -> str:
    if dialect == "json":
        return str(ns)
    if dialect == "sql-timescale":
        return f"TIMESTAMP '{_sql_timestamp(ns)}'"
    if dialect == "sql-clickhouse":
        return f"toDateTime64('{_sql_timestamp(ns)}', 9, 'UTC')"
    if dialect == "flux":
        return _flux_timestamp(ns)
    if dialect == "q":
        return _q_timestamp(ns)
    raise ConfigurationError(f"unknown dialect {dialect!r}")


def _symbol_literal(symbol: str, dialect: str) -> str:
    if dialect == "json":
        return json.dumps(symbol)[1:-1]  # templates carry their own quotes
    if dialect in ("sql-timescale", "sql-clickhouse"):
        return "'" + symbol.replace("'", "''") + "'"
    if dialect == "flux":
        return json.dumps(symbol)
    if dialect == "q":
        return '`$"' + symbol + '"'
    raise ConfigurationError(f"unknown dialect {dialect!r}")


def placeholder_values(spec: BenchmarkSpec, dialect: str) -> dict[str, str | None]:
    values: dict[str, str | None] = {
        "range_begin": _ts_literal(spec.range.begin, dialect),
        "range_end": _ts_literal(spec.range.end, dialect),
        "symbol": _symbol_literal(spec.symbol, dialect),
        "inner_width": (_width_literal(spec.inner_width, dialect)
                        if spec.inner_width else None),
        "outer_width": (_width_literal(spec.outer_width, dialect)
                        if spec.outer_width else None),
        "depth_level": str(spec.depth_level) if spec.depth_level else None,
        "random_at": (_ts_literal(analytics.seeded_instant(spec), dialect)
                      if spec.rng_seed is not None else None),
    }
    return values


def render(asset: QueryAsset, spec: BenchmarkSpec) -> str:
    """Substitute all placeholders; stable output for fixed inputs."""
    if asset.benchmark_id != spec.id:
        raise ConfigurationError(
            f"asset is for {asset.benchmark_id}, spec is {spec.id}")
    values = placeholder_values(spec, asset.dialect)

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise ConfigurationError(f"unknown placeholder {{{{{name}}}}} in {spec.id} asset")
        value = values[name]
        if value is None:
            raise ConfigurationError(
                f"placeholder {{{{{name}}}}} has no value for spec {spec.id}")
        return value

    text = PLACEHOLDER.sub(substitute, asset.template_text)
    leftover = PLACEHOLDER.search(text)
    if leftover:
        raise ConfigurationError(
            f"unresolved placeholder {leftover.group(0)} in {spec.id} asset")
    return text
