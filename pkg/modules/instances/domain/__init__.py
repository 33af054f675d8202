"""Domain layer for the instances module."""
