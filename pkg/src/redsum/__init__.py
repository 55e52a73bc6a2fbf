"""Redundancy-aware iterative sentence ranking for extractive summarization."""

__version__ = "0.1.0"
