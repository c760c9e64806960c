"""Diffeomorphic image registration with band-limited velocity fields."""

from .domain import Domain
from .fields import BandScalarField, BandVectorField, GridMap, SpatialField

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "BandScalarField",
    "BandVectorField",
    "GridMap",
    "SpatialField",
    "__version__",
]
