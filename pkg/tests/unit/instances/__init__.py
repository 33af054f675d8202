"""Unit tests for the instances module."""
