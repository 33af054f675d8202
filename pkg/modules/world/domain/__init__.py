"""Domain layer for the world module.

Contains the simulation value objects, entities and pure services.
No file system access is allowed in this layer.
"""
