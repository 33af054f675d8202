"""Lift-splat fusion of multi-camera images into a bird's-eye-view state."""
