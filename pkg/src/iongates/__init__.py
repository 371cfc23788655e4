"""Simulation and analysis tools for a two-ion optical-qubit register:
Molmer-Sorensen gate dynamics, laser and field noise, decoupled Ramsey
sequences, micromotion addressing, fluorescence readout and the AOM
frequency chain."""
from .qcore import GateParams, Populations, RegisterState, evolve, propagate

__version__ = "0.1.0"

__all__ = ["GateParams", "Populations", "RegisterState", "evolve", "propagate",
           "__version__"]
