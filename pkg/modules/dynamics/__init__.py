"""Stochastic residual state-space model over BEV states."""
