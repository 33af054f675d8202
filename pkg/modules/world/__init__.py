"""Synthetic driving micro-world: simulation, BEV labels and camera rendering."""
