"""Domain layer for the liftsplat module.

Camera geometry, frustum lifting, ground-plane pooling and the image
encoder network.
"""
