"""Immutable domain types."""
