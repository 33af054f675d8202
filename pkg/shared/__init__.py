"""Shared infrastructure: logging, errors, events, seeding and layers."""
