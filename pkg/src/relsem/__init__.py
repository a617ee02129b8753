"""Translate annotated MiniWhile programs into two-state relation formulas."""

__version__ = "0.1.0"
