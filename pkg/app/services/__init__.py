"""Computation behind the CLI and the API."""
