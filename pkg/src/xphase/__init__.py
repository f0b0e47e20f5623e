"""Extended phase-space mechanics.

Subpackages and modules:

* :mod:`xphase.core` -- constants and points of M^e
* :mod:`xphase.numdiff` -- gradients and Poisson brackets
* :mod:`xphase.fieldexpr` -- expression trees for potentials
* :mod:`xphase.canon` -- generating functions and symplectic checks
* :mod:`xphase.dynamics` -- electromagnetic equations of motion and Maxwell checks
* :mod:`xphase.group` -- Galilei and alpha-deformed group actions
* :mod:`xphase.scenario`, :mod:`xphase.runner`, :mod:`xphase.cli` -- scenario harness
"""
from .core import CANONICAL_NAMES, Constants, ExtendedState, StateError, Tangent8, canonical_coords, state_from_canonical

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_NAMES",
    "Constants",
    "ExtendedState",
    "StateError",
    "Tangent8",
    "canonical_coords",
    "state_from_canonical",
    "__version__",
]
