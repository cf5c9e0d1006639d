"""Calibrated safety prediction for an image-observed pole-cart system."""

__version__ = "0.1.0"
