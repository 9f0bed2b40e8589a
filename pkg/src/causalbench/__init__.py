"""Causal structure learning (PC, GES, FCI) and a benchmark harness for them."""

__version__ = "0.1.0"
