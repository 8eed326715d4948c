"""Monte Carlo tools for the limiting Gaussian bandit of batched adaptive experiments."""

__version__ = "0.1.0"
