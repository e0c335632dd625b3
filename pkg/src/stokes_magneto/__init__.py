"""Stokes-Magneto harness: pseudo-spectral simulation and verification of the
fractional Stokes-Magneto relaxation system."""

__version__ = "0.1.0"
