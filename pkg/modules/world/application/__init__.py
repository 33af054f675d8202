"""Application layer for the world module."""
