"""Purification and ground-state cooling through virtual subsystems of the environment."""

__version__ = "0.1.0"

from .errors import QPurifyError
from .states import DensityOperator, PureState, purity, random_density, validate, von_neumann_entropy
from .subsystems import build_from_spectrum, is_purely_initialized, nearest_initialized, split_dimensions
from .swap import build_generalized_swap, cool, purify, thresholds

__all__ = [
    "DensityOperator",
    "PureState",
    "QPurifyError",
    "build_from_spectrum",
    "build_generalized_swap",
    "cool",
    "is_purely_initialized",
    "nearest_initialized",
    "purify",
    "purity",
    "random_density",
    "split_dimensions",
    "thresholds",
    "validate",
    "von_neumann_entropy",
]
