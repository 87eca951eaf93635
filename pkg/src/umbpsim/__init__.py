"""Trace-driven memory hierarchy simulator with a usage-and-miss-based
prefetcher and five comparison prefetchers."""

__version__ = "0.1.0"
