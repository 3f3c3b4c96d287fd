"""Numerical laboratory for a coupled pair of nonlinear drift-diffusion
equations with a small cross-interaction, treated as a Wasserstein gradient
flow in one space dimension."""

__version__ = "0.1.0"
