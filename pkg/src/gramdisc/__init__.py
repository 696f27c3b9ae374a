"""Gram-matrix reduced semidefinite programs for pure-state discrimination."""

__version__ = "0.1.0"
