"""Application layer for the engine module.

Use cases for pre-training, training, evaluation and plotting.
"""
