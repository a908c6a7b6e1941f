"""FastAPI service hosting the embedded engine."""

from .app import create_app

__all__ = ["create_app"]
