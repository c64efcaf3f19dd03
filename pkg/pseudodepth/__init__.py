"""Pseudo-supervised monocular depth estimation at desk scale."""

__version__ = "1.0.0"
