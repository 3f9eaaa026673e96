"""Unsupervised path representation learning on road-network graphs."""

__version__ = "0.1.0"
