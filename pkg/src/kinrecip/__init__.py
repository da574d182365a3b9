"""Kin selection meets direct reciprocity in heterogeneous repeated games."""

__version__ = "0.1.0"
