"""Estimate the compositionality of rule programs by their mapping-table size."""

__version__ = "0.1.0"
