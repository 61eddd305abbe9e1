"""Hybrid QA over a Raman peak database and an embedded literature corpus."""

__version__ = "0.1.0"
