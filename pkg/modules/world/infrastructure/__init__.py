"""Infrastructure layer for the world module."""
