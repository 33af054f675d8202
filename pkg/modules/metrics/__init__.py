"""Segmentation, panoptic and diversity metrics and the evaluation protocol."""
