"""Operations on real fields sampled on the full grid.

Everything here treats the grid as periodic: warps wrap around the box,
finite differences use wrap-around stencils.  Compositions like
``image(id + u)`` use linear interpolation by default; cubic splines and
exact trigonometric interpolation are available where smoothness of the
composition matters more than speed.
"""

from __future__ import annotations

import numpy as np
import scipy.fft
from scipy import ndimage

from .domain import Domain

_MAP_ORDER = {"linear": 1, "cubic": 3}


def _sample_coordinates(domain: Domain, displacement: np.ndarray) -> np.ndarray:
    """Index-space coordinates of ``id + u`` for every grid point."""
    coords = np.empty_like(displacement)
    for ax, n in enumerate(domain.shape):
        idx = np.arange(n, dtype=np.float64)
        shape = [1] * domain.ndim
        shape[ax] = n
        coords[ax] = idx.reshape(shape) + displacement[ax] * n
    return coords


def warp(domain: Domain, values: np.ndarray, displacement: np.ndarray,
         interp: str = "linear") -> np.ndarray:
    """Evaluate ``values`` at the points ``x + u(x)``, periodically.

    ``interp`` is one of ``linear``, ``cubic``, ``nearest`` (for label
    volumes) or ``fourier`` (exact trigonometric interpolation, used by the
    derivative checks where the composition must be smooth).
    """
    if interp == "fourier":
        return fourier_warp(domain, values, displacement)
    coords = _sample_coordinates(domain, displacement)
    if interp == "nearest":
        return ndimage.map_coordinates(values, coords, order=0, mode="grid-wrap")
    order = _MAP_ORDER.get(interp)
    if order is None:
        raise ValueError(f"unknown interpolation {interp!r}")
    return ndimage.map_coordinates(values, coords, order=order, mode="grid-wrap")


def fourier_warp(domain: Domain, values: np.ndarray, displacement: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``values`` at ``x + u(x)``.

    Exact for fields whose spectrum is resolved on the grid, and smooth in
    the displacement.  Memory grows as ``prod(shape)**2 / shape[0]``, so
    this is meant for small verification problems, not production volumes.
    """
    shape = domain.shape
    d = domain.ndim
    spec = scipy.fft.fftn(values) / float(np.prod(shape))
    coords = _sample_coordinates(domain, displacement)
    npts = int(np.prod(shape))
    phases = []
    for ax, n in enumerate(shape):
        freqs = np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(np.int64)
        x = coords[ax].reshape(npts) / n  # unit-box coordinates
        phase = np.exp(2j * np.pi * np.outer(x, freqs))
        if n % 2 == 0:
            # the lone Nyquist bin represents the pair +-n/2 of a real field
            phase[:, n // 2] = np.cos(2.0 * np.pi * x * (n // 2))
        phases.append(phase)
    acc = np.tensordot(spec, phases[-1], axes=([d - 1], [1]))
    for ax in range(d - 2, -1, -1):
        acc = np.einsum("...kp,pk->...p", acc, phases[ax])
    return acc.real.reshape(shape)


def spatial_gradient(domain: Domain, values: np.ndarray, mode: str = "central") -> np.ndarray:
    """Gradient of a scalar grid field.

    ``central`` uses second-order periodic central differences; ``spectral``
    differentiates the trigonometric interpolant.
    """
    d = domain.ndim
    out = np.empty((d,) + domain.shape)
    if mode == "central":
        for ax, h in enumerate(domain.spacing):
            out[ax] = (np.roll(values, -1, axis=ax) - np.roll(values, 1, axis=ax)) / (2.0 * h)
        return out
    if mode == "spectral":
        spec = scipy.fft.fftn(values)
        for ax, n in enumerate(domain.shape):
            k = np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(np.float64)
            if n % 2 == 0:
                k[n // 2] = 0.0  # odd derivative of the real Nyquist mode
            shape = [1] * d
            shape[ax] = n
            out[ax] = scipy.fft.ifftn(spec * (2j * np.pi * k.reshape(shape))).real
        return out
    raise ValueError(f"unknown gradient mode {mode!r}")


def jacobian_matrix(domain: Domain, displacement: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of the map ``id + u``, shape (d, d, *grid)."""
    d = domain.ndim
    jac = np.empty((d, d) + domain.shape)
    for i in range(d):
        du = spatial_gradient(domain, displacement[i])
        for j in range(d):
            jac[i, j] = du[j] + (1.0 if i == j else 0.0)
    return jac


def jacobian_determinant(domain: Domain, displacement: np.ndarray) -> np.ndarray:
    """Determinant of the central-difference Jacobian of ``id + u``.

    Negative values are returned as computed; they indicate the sampled map
    is not a diffeomorphism.
    """
    jac = jacobian_matrix(domain, displacement)
    d = domain.ndim
    if d == 1:
        return jac[0, 0].copy()
    if d == 2:
        return jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    a, b, c = jac[0], jac[1], jac[2]
    return (
        a[0] * (b[1] * c[2] - b[2] * c[1])
        - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
    )
