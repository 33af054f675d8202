"""Unit tests for the liftsplat module."""
