"""Explanation-driven similarity and ensemble analysis for unsupervised anomaly detectors."""

__version__ = "0.1.0"
