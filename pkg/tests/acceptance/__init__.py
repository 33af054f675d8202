"""Acceptance runs for the lab.

Full-size experiments whose reports are checked for directional trends.
They are deselected unless ``-m acceptance`` is given.
"""
