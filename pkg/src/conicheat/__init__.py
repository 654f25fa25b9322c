"""Heat kernels, renormalized heat traces and determinants on exact cones."""

__version__ = "0.1.0"
