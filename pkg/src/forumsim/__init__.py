"""Seeded generative-agent forum simulator and validation analyses."""

__version__ = "0.1.0"
