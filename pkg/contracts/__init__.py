"""Contracts shared across modules.

This package contains:
- Event schemas (Pydantic models)
"""
