"""Static figures from the evaluation pipeline's CSV reports."""

__version__ = "0.1.0"
