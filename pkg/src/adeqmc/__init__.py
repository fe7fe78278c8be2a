"""Multilevel Monte Carlo resource adequacy assessment with actively-learned
random forest surrogates."""

__version__ = "0.1.0"
