"""Independent reference solvers used to verify the spectral solver."""
