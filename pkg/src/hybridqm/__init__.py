"""Pseudo-spectral toolkit for hybrid (q, alpha)-deformed quantum mechanics."""
from .errors import (BoundaryLeakWarning, ConfigurationError, ConsistencyError, NumericalAbort,
                     ShapeError)
from .grid import Grid1D, SpectralField, apply_multiplier, forward, inverse, make_grid
from .symbols import (HybridParams, commutator_multiplier, effective_mass, group_velocity,
                      hybrid_symbol, kinetic_symbol, limit_symbols)
from .states import MomentSet, WaveFunction, gaussian, moments, two_mode_superposition
from .operators import HybridOperatorSet, Potential, build_operators

__version__ = "0.1.0"
