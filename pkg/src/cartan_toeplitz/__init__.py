"""Toeplitz operators with radial-like symbols on the type I Cartan domain."""

__version__ = "0.1.0"
