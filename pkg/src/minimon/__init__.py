"""Deterministic monster battles with pluggable agents, move generation, and evaluation."""

__version__ = "0.1.0"
