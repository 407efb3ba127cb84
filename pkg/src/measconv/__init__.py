"""Convolution of probability measures under group actions."""

__version__ = "0.1.0"
