"""Sparse fast-rate online convex optimization over the l1-ball."""

from ._backend import BACKEND

__version__ = "0.1.0"
