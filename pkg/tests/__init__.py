"""Tests for pseudo-supervised-depth."""
