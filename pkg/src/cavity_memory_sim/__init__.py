"""Dynamics of atoms coupled to Lorentzian cavity reservoirs: RWA amplitudes,
Laplace-domain rate analysis and hierarchical equations of motion."""

__version__ = "0.1.0"
