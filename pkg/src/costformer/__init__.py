"""Cost-sensitive transformer workflow for imbalanced tabular failure prediction."""

__version__ = "0.1.0"
