"""Minimal surfaces from Weierstrass data: periods, meshes and diagnostics."""

__version__ = "0.1.0"
