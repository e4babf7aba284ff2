"""
Threshold bounds, algorithms and oracles for q-overlap Exact Cover.

The package computes the first-moment upper bound r_up(q), runs the
LARGEST-CLAUSE and LAZY LARGEST-CLAUSE algorithms with their trajectory
predictions, and enumerates small instances exhaustively.
"""

from __future__ import annotations

from .const import VERSION
from .core import (
    OverlapEcContradictionError,
    OverlapEcDomainError,
    OverlapEcError,
    OverlapEcInvalidParametersError,
    OverlapEcNumericalError,
    OverlapEcResourceLimitError,
)

__version__ = VERSION

__all__ = [
    "OverlapEcContradictionError",
    "OverlapEcDomainError",
    "OverlapEcError",
    "OverlapEcInvalidParametersError",
    "OverlapEcNumericalError",
    "OverlapEcResourceLimitError",
    "__version__",
]
