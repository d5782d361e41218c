"""Difference modules, formal classification at infinity, parabolic degrees,
the lambda-connection bridge and rank-one monopole models."""

__version__ = "0.1.0"
