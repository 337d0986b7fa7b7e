"""Spectral Navier-Stokes solver with Helmholtz/heat-kernel machinery and numerical checks."""
__version__ = "0.1.0"
