"""Certification toolkit for the Cartan-cubic solution w5 = P5/|x|."""

__version__ = "0.1.0"
