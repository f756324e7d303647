"""Trivariate bicycle quantum codes: construction, logical operators,
syndrome-extraction circuits, simulation and matching decoding."""

from .codes import (
    StabilizerCode,
    TBCodeSpec,
    build_code,
    build_rotated_surface_code,
    compute_distance_exact,
    compute_k,
    estimate_distance,
    named_code,
)
from .errors import (
    CapacityError,
    ContractError,
    HypergraphError,
    InfeasibleError,
    SchedulingError,
    ShapeError,
    TBCodesError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ContractError",
    "HypergraphError",
    "InfeasibleError",
    "SchedulingError",
    "ShapeError",
    "StabilizerCode",
    "TBCodeSpec",
    "TBCodesError",
    "ValidationError",
    "build_code",
    "build_rotated_surface_code",
    "compute_distance_exact",
    "compute_k",
    "estimate_distance",
    "named_code",
]
