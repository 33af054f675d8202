"""Domain layer for the dynamics module."""
