"""Simulation and analysis toolkit for the non-equilibrium Lindblad
dynamics of the quantum spherical model."""

__version__ = "0.1.0"
