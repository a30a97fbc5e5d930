"""Compile and verify quantum-error-correction pulse sequences for trapped ions."""

__version__ = "0.1.0"
