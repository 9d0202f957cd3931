"""Driven degenerate three-level cascade laser: squeezing and photon statistics."""

__version__ = "0.1.0"
