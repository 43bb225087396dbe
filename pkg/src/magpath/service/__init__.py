"""HTTP service wrapping the pathway-mining pipeline."""

from .app import ServiceConfig, create_app

__all__ = ["ServiceConfig", "create_app"]
