"""Finite free convolutions, permanents and quadrature checks."""
from .poly import MonicPoly, measure_of, poly_log_potential, real_roots
