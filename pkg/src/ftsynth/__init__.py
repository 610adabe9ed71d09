"""Optimal gate-sequence approximation over a fault-tolerant Clifford+T alphabet."""

__version__ = "0.1.0"
