"""Simulating LOCAL algorithms and checking locally checkable labelings on port-numbered networks."""

__version__ = "0.1.0"
