"""Stylistic source classification and fuzzy text-reuse detection."""

__version__ = "0.1.0"

from .labels import ClassLabel, TRAIN_CLASSES, parse_label

__all__ = ["ClassLabel", "TRAIN_CLASSES", "parse_label", "__version__"]
