"""Relative type frequencies in multitype branching processes."""

__version__ = "0.1.0"
