"""Instance maps from decoded modalities: centers, grouping, tracking."""
