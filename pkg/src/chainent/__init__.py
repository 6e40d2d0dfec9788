"""Simulation and analysis of a closed harmonic chain with time-dependent coupling."""

__version__ = "0.1.0"
