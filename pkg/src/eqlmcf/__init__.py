"""Equivariant Lagrangian mean curvature flow in C^2 via its planar profile curve."""

__version__ = "0.1.0"
