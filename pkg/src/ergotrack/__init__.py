"""Optimal tracking of ergodic observations, joining relaxations and
consistency checks for quantized and likelihood-based estimators."""

__version__ = "0.1.0"
