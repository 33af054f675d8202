"""Unit tests for the dynamics module."""
