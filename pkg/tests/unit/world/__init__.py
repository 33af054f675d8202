"""Unit tests for the world module."""
