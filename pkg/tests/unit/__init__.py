"""Unit tests for the lab.

Unit tests exercise individual components in isolation, without
dataset directories or trained checkpoints.
"""
