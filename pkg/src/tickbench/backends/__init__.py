"""Backend adapters, query assets, normalization and comparison."""

from __future__ import annotations

from ..errors import ConfigurationError
from .assets import QueryAsset, builtin_asset_dir, load_asset, render
from .base import (
    BackendAdapter,
    BackendDescriptor,
    Capabilities,
    IngestStats,
    RawResult,
)
from .embedded import EmbeddedBackend
from .http import HttpBackend
from .normalize import (
    BENCHMARK_SCHEMAS,
    ConsistencyVerdict,
    compare,
    normalize,
    schema_for,
)

_KINDS = {"embedded": EmbeddedBackend, "http": HttpBackend}


def create_adapter(descriptor: BackendDescriptor, **kwargs) -> BackendAdapter:
    """Instantiate the adapter for a descriptor's kind."""
    try:
        cls = _KINDS[descriptor.kind]
    except KeyError:
        raise ConfigurationError(
            f"unknown backend kind {descriptor.kind!r}; "
            f"known kinds: {', '.join(sorted(_KINDS))}") from None
    return cls(descriptor, **kwargs)


def asset_dir_for(descriptor: BackendDescriptor):
    """Backend's template directory: explicit override or shipped default."""
    if descriptor.asset_dir is not None:
        return descriptor.asset_dir
    kind = "embedded" if descriptor.kind == "http" else descriptor.kind
    return builtin_asset_dir(kind)


__all__ = [
    "BackendAdapter", "BackendDescriptor", "Capabilities", "IngestStats",
    "RawResult", "EmbeddedBackend", "HttpBackend", "QueryAsset",
    "builtin_asset_dir", "load_asset", "render", "normalize", "compare",
    "schema_for", "ConsistencyVerdict", "BENCHMARK_SCHEMAS",
    "create_adapter", "asset_dir_for",
]
