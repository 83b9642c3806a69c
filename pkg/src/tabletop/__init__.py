"""Deterministic tabletop pick-and-place simulator and long-horizon task harness."""

__version__ = "0.1.0"
