"""HTTP front end: request/response schemas and the app factory."""

from .app import create_app

__all__ = ["create_app"]
