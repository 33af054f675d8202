"""Domain layer for the engine module."""
