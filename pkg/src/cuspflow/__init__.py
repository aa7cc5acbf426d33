"""Hyperbolic lattices in Clifford-matrix form: algebra, Eisenstein constant terms and cusp excursions."""

__version__ = "0.1.0"
