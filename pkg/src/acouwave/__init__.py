"""Spectral Galerkin solvers and well-posedness diagnostics for a damped nonlinear acoustic system."""
