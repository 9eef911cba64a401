"""Cartan domains, Bergman metrics and Bloch-space composition operators.

Tools for evaluating Bergman metrics on the four classical bounded symmetric
domains and their products, building the matrix Möbius automorphisms of
R_I, constructing extremal Bloch test functions and sampling the metric
distortion of holomorphic self-maps near the boundary.
"""

__version__ = "0.1.0"

from .cli import main  # noqa: E402
