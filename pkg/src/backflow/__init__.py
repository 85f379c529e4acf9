"""Backflow determinant ansatz for antisymmetric polynomials, with exact dimension counts."""

__version__ = "0.1.0"
