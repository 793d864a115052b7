"""Agent-based housing market simulator."""

__version__ = "0.1.0"
