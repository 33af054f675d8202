"""Domain layer for the heads module."""
