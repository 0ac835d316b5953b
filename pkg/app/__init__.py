"""Quantile pricing on large financial markets."""
