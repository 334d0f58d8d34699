"""Chain recurrence, attractors and basins of random dynamical systems on 1-D cell grids."""

__version__ = "0.1.0"

from .geometry import CellSet, DomainError, Grid, PhaseSpace, fatten, hausdorff, hausdorff_semi
from .noise import HorizonExceeded, NoiseModel, NoisePath, sample_path, shift, value
from .systems import NumericOverflow, make_system, SYSTEM_NAMES
from .chains import (ConfigError, RandomVariableSpec, build_graph, chain_recurrent_cells,
                     classify_variable, find_chain)
from .attractors import (ConsistencyError, FiberWindow, RandomCellFamily, basin, build_Ux,
                         check_pre_attractor, enumerate_attractors, omega_limit)
from .theorem import aggregate, verify_decomposition

__all__ = [
    "CellSet", "DomainError", "Grid", "PhaseSpace", "fatten", "hausdorff", "hausdorff_semi",
    "HorizonExceeded", "NoiseModel", "NoisePath", "sample_path", "shift", "value",
    "NumericOverflow", "make_system", "SYSTEM_NAMES",
    "ConfigError", "RandomVariableSpec", "build_graph", "chain_recurrent_cells",
    "classify_variable", "find_chain",
    "ConsistencyError", "FiberWindow", "RandomCellFamily", "basin", "build_Ux",
    "check_pre_attractor", "enumerate_attractors", "omega_limit",
    "aggregate", "verify_decomposition",
]
