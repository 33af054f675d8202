"""Unit tests for the shared module."""
