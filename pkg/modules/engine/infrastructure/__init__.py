"""Infrastructure adapters for the engine module."""
