"""Unit tests for the heads module."""
