"""Exact lookahead versus myopic Bayesian adaptive design on discrete grids."""

__version__ = "0.1.0"
