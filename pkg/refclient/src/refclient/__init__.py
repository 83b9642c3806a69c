"""Reference external-policy client for the tabletop harness wire protocol."""

from .client import serve

__all__ = ["serve"]
