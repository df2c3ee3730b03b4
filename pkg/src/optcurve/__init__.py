"""Gradient descent and gradient flow on smooth convex functions, and
numerical verdicts on the shape of the resulting optimization curves."""

__version__ = "0.1.0"
