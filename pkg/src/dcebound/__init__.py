"""Thermal-noise driven plate dynamics, dynamical-Casimir photon creation and
the resulting second-law ceiling on wall conductivity."""

__version__ = "0.1.0"
