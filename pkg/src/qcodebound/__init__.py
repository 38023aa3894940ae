"""Error-exponent bounds and exact small-code simulation for quantum channels."""

from .channel import (
    ErrorBasis,
    ErrorDistribution,
    QuantumChannel,
    amplitude_damping,
    depolarizing,
    error_distribution,
    standard_error_basis,
    tensor_power,
)
from .errors import (
    DimensionError,
    InvariantViolation,
    QCodeBoundError,
    ResourceError,
    SolverInconsistencyError,
    UnsupportedDimensionError,
    ValidationError,
)
from .exponent import (
    bound_comparison,
    capacity_lower_bound,
    exponent_E,
    exponent_E_tilted,
    p_prime,
    finite_length_bound,
)
from .gfsym import (
    SymplecticSubspace,
    SymplecticVector,
    dual_space,
    min_entropy_coset_leaders,
    symplectic_form,
)
from .simkit import build_codes, build_recovery, ensemble_check

__all__ = [
    "DimensionError",
    "ErrorBasis",
    "ErrorDistribution",
    "InvariantViolation",
    "QCodeBoundError",
    "QuantumChannel",
    "ResourceError",
    "SolverInconsistencyError",
    "SymplecticSubspace",
    "SymplecticVector",
    "UnsupportedDimensionError",
    "ValidationError",
    "amplitude_damping",
    "bound_comparison",
    "build_codes",
    "build_recovery",
    "capacity_lower_bound",
    "depolarizing",
    "dual_space",
    "error_distribution",
    "exponent_E",
    "exponent_E_tilted",
    "ensemble_check",
    "min_entropy_coset_leaders",
    "p_prime",
    "standard_error_basis",
    "symplectic_form",
    "tensor_power",
    "finite_length_bound",
]
