"""Heralded entanglement distribution via nonlocal photon subtraction.

Simulation of linear-optics entanglement-distribution schemes fed by
imperfect single-photon sources: exact conditional memory states in
truncated Fock space, entanglement quantification in the relevant qubit
subspaces, phase-space and polarization Bell tests, and parameter
optimization and sweeps.
"""

__version__ = "0.1.0"

from . import bell, cli, entanglement, fock, optimize, schemes, sources, subtraction

__all__ = [
    "__version__",
    "bell",
    "cli",
    "entanglement",
    "fock",
    "optimize",
    "schemes",
    "sources",
    "subtraction",
]
