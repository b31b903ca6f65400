"""Focused clinical snippet search over a medical knowledge graph."""

__version__ = "0.1.0"
