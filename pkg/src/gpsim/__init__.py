"""Adaptive Gaussian-process regression on fixed design grids.

Spectral priors, posterior computation, empirical- and hierarchical-Bayes
scale selection, credible sets, and truth-function classes.
"""

__version__ = "0.1.0"
