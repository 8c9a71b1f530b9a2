"""HTTP service wrapping the pipeline."""
from .app import app, create_app

__all__ = ["app", "create_app"]
