"""Domain layer for the metrics module."""
