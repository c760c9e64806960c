"""Typed wrappers around raw coefficient blocks and grid arrays.

The numerical kernels in :mod:`blreg.spectral` and :mod:`blreg.gridops`
operate on bare numpy arrays for speed; these classes carry the domain
alongside the data and validate shapes at the API boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .domain import Domain


def _check_block(domain: Domain, coeffs: np.ndarray, ncomp: int | None):
    expected = domain.block_shape if ncomp is None else (ncomp,) + domain.block_shape
    if coeffs.shape != expected:
        raise ValueError(f"coefficient shape {coeffs.shape} does not match {expected}")
    if not np.all(np.isfinite(coeffs.view(np.float64))):
        raise ValueError("coefficients contain NaN or Inf")


@dataclass(frozen=True)
class BandScalarField:
    """Band-limited scalar field stored as complex Fourier coefficients."""

    domain: Domain
    coeffs: np.ndarray

    def __post_init__(self):
        _check_block(self.domain, self.coeffs, None)

    def to_grid(self) -> np.ndarray:
        return spectral.include(self.domain, self.coeffs)

    @classmethod
    def from_grid(cls, domain: Domain, values: np.ndarray) -> "BandScalarField":
        return cls(domain, spectral.project(domain, np.asarray(values, dtype=np.float64)))

    @classmethod
    def zero(cls, domain: Domain) -> "BandScalarField":
        return cls(domain, domain.zero_scalar())


@dataclass(frozen=True)
class BandVectorField:
    """Band-limited vector field, one coefficient block per component."""

    domain: Domain
    coeffs: np.ndarray

    def __post_init__(self):
        _check_block(self.domain, self.coeffs, self.domain.ndim)

    def to_grid(self) -> np.ndarray:
        return spectral.include(self.domain, self.coeffs)

    @classmethod
    def from_grid(cls, domain: Domain, values: np.ndarray) -> "BandVectorField":
        return cls(domain, spectral.project(domain, np.asarray(values, dtype=np.float64)))

    @classmethod
    def zero(cls, domain: Domain) -> "BandVectorField":
        return cls(domain, domain.zero_vector())

    def divergence(self) -> BandScalarField:
        return BandScalarField(self.domain, spectral.spectral_divergence(self.domain, self.coeffs))


@dataclass(frozen=True)
class SpatialField:
    """Real field sampled on the full grid; scalar or one block per component."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.shape not in (self.domain.shape, (self.domain.ndim,) + self.domain.shape):
            raise ValueError(f"value shape {v.shape} does not match domain {self.domain.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values contain NaN or Inf")

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == self.domain.ndim + 1


@dataclass(frozen=True)
class GridMap:
    """Map of the periodic box stored as a displacement, ``map = id + u``."""

    domain: Domain
    displacement: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.displacement, dtype=np.float64)
        object.__setattr__(self, "displacement", u)
        if u.shape != (self.domain.ndim,) + self.domain.shape:
            raise ValueError("displacement must be a vector field on the full grid")
        if not np.all(np.isfinite(u)):
            raise ValueError("displacement contains NaN or Inf")
        if np.max(np.abs(u)) >= 1.0:
            raise ValueError("displacement exceeds the domain extent")

    @classmethod
    def identity(cls, domain: Domain) -> "GridMap":
        return cls(domain, np.zeros((domain.ndim,) + domain.shape))
