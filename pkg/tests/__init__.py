"""Test suite for the lab."""
