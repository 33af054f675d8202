"""Integration tests for the lab.

Integration tests run the generate, train, evaluate and plot chain on
tiny worlds written to temporary directories.
"""
