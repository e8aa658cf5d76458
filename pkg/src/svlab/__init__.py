"""Stochastic-volatility model laboratory."""
__version__ = "0.1.0"
