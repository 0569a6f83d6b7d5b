"""Finite subdivision rules on the sphere: subdivision combinatorics, growth
classification, non-expanding spines, Levy detection, multicurve spectra, and
certified conformal-energy bounds."""

__version__ = "0.1.0"
