"""Computational domain shared by the spectral and spatial representations.

The image domain is the periodic unit box sampled on a regular grid with
``shape[j]`` points per axis (grid spacing ``1/shape[j]``).  Velocity fields
live in a finite-dimensional space of band-limited vector fields whose
Fourier coefficients vanish outside ``|k_j| <= bandwidth[j]``.  The domain
also carries the parameters of the Sobolev-type metric operator
``(Id - alpha * Laplacian)**order`` that defines the norm on that space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Domain:
    """Grid sizes, frequency bounds and metric parameters.

    Parameters
    ----------
    shape : tuple of int
        Samples per axis of the full grid.
    bandwidth : tuple of int
        Frequency bound per axis; coefficients are kept for ``|k_j| <= K_j``.
    alpha : float
        Weight of the Laplacian in the metric operator, must be positive.
    order : int
        Integer exponent of the metric operator, must be >= 1.
    symbol : str
        ``"discrete"`` uses the second-order finite-difference symbol of the
        Laplacian, ``"continuous"`` the exact Fourier symbol.
    """

    shape: tuple[int, ...]
    bandwidth: tuple[int, ...]
    alpha: float = 0.02
    order: int = 2
    symbol: str = "discrete"

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        bandwidth = tuple(int(k) for k in self.bandwidth)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "bandwidth", bandwidth)
        if len(shape) not in (1, 2, 3):
            raise ValueError(f"only 1-, 2- or 3-dimensional grids are supported, got {shape}")
        if len(bandwidth) != len(shape):
            raise ValueError("bandwidth must have one entry per grid axis")
        for n, k in zip(shape, bandwidth):
            if n < 2:
                raise ValueError(f"grid size {n} is too small")
            if not 1 <= k <= n // 2:
                raise ValueError(f"bandwidth {k} outside [1, {n // 2}] for grid size {n}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (isinstance(self.order, (int, np.integer)) and self.order >= 1):
            raise ValueError("order must be an integer >= 1")
        if self.symbol not in ("discrete", "continuous"):
            raise ValueError(f"unknown symbol {self.symbol!r}")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(1.0 / n for n in self.shape)

    @property
    def block_shape(self) -> tuple[int, ...]:
        """Shape of the stored coefficient block, ``2*K_j + 1`` per axis."""
        return tuple(2 * k + 1 for k in self.bandwidth)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def frequencies(self) -> tuple[np.ndarray, ...]:
        """Integer frequencies per axis in FFT (wrap-around) order."""
        return _frequencies(self.block_shape)

    def zero_scalar(self) -> np.ndarray:
        return np.zeros(self.block_shape, dtype=np.complex128)

    def zero_vector(self) -> np.ndarray:
        return np.zeros((self.ndim,) + self.block_shape, dtype=np.complex128)


@lru_cache(maxsize=None)
def _frequencies(block_shape: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    return tuple(
        np.rint(np.fft.fftfreq(m, 1.0 / m)).astype(np.int64) for m in block_shape
    )
