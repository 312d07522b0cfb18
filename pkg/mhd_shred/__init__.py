"""Parametric MHD snapshots, SVD compression and SHRED reconstruction."""

__version__ = "0.1.0"
