"""Robust transport plans on directed graphs via discrete Schrödinger bridges."""

__version__ = "0.1.0"
