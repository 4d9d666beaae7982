"""Numerical toolkit for product Hardy spaces of Schrodinger-type operators."""
__version__ = "0.1.0"
