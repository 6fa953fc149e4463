"""Lattice spherical, ball and bilinear averages with exact and sliced evaluation."""
__version__ = "0.1.0"
