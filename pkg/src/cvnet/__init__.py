"""Entanglement dynamics in continuous-variable random quantum networks.

A Gaussian circuit engine and a random-walk theory of the same dynamics,
with Page-curve, mixing-time, light-cone, superposition, sensing-witness and
PDE analyses on top.
"""

__version__ = "0.1.0"
