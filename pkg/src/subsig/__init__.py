"""Exact laboratory for the local equivariant index density of sub-signature operators."""

__version__ = "0.1.0"
