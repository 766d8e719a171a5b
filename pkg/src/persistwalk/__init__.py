"""Simulation and verification toolkit for persistent random walks and integrated telegraph noise."""

__version__ = "0.1.0"
