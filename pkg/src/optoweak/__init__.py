"""Post-selected weak amplification with a single-photon optomechanical pointer."""

from .analysis import (
    ScanGrid,
    ScanReport,
    amplification_scan,
    default_grid,
    kerr_contrast,
    limit_table,
    unconditioned_trajectory,
)
from .dynamics import CouplingParams, branch_unitary, full_hamiltonian, oracle_evolve
from .errors import (
    ConfigError,
    ConvergenceError,
    DarkPortVanished,
    DimensionMismatch,
    EmptyScan,
    OptoweakError,
    OrthogonalSelection,
    TruncationError,
)
from .pointer_states import (
    Coherent,
    CoherentSqueezed,
    FockMixture,
    Ground,
    PhysicalParams,
    Squeezed,
    Thermal,
    dimensionless_from_physical,
    make_pointer,
    pointer_spread,
)
from .protocol import (
    ConditionedResult,
    PathState,
    PostSelection,
    condition,
    first_order_prediction,
    kraus_operator,
    weak_value,
)

__version__ = "0.1.0"
