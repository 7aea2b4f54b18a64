"""Compressible flow over rough walls and the inequalities behind the no-slip limit."""
from .errors import (
    ConfigError,
    EmptySeries,
    NoConvergence,
    NonPositiveData,
    NonPositiveDensity,
    NonPositiveProfile,
    RugoseError,
    UnderResolved,
    WeightDegenerate,
)
from .geometry import DomainSpec, Mode, ProfileKind, Status, make_profile
from .grid import MappedGrid, build_grid

__version__ = "0.1.0"
