"""One-step GHZ-state generation by fractional adiabatic passage in a chain
of fiber-coupled cavities: coherent and open-system dynamics, dark-state
analytics and parameter sweeps.

Units throughout: hbar = 1, frequencies in units of the atom-cavity coupling
g, times in units of 1/g.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .model import SystemParams, enumerate_coherent_basis, enumerate_dissipative_basis  # noqa: E402
from .darkstate import analytic_dark_state, numeric_dark_state, target_ghz  # noqa: E402
from .dynamics import IntegrationError, propagate_lindblad, propagate_schrodinger  # noqa: E402
from .observables import fidelity, fidelity_mixed, fidelity_pure, populations  # noqa: E402

__all__ = [
    "IntegrationError",
    "SystemParams",
    "__version__",
    "analytic_dark_state",
    "enumerate_coherent_basis",
    "enumerate_dissipative_basis",
    "fidelity",
    "fidelity_mixed",
    "fidelity_pure",
    "numeric_dark_state",
    "populations",
    "propagate_lindblad",
    "propagate_schrodinger",
    "target_ghz",
]
