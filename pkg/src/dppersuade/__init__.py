"""Optimal signaling schemes under differential-privacy constraints."""

__version__ = "0.1.0"
