"""Coupled thermal free-surface lattice Boltzmann model of electron beam melting of a powder layer."""

__version__ = "0.1.0"
