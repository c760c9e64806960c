"""Shared test utilities: brute-force oracles and random field generators."""

import numpy as np

from blreg.domain import Domain
from blreg.spectral import symmetrize


def random_scalar_block(domain, rng, scale=1.0):
    """Random conjugate-symmetric scalar coefficient block."""
    shape = domain.block_shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return symmetrize(scale * c, domain.ndim)


def random_vector_block(domain, rng, scale=1.0):
    shape = (domain.ndim,) + domain.block_shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return symmetrize(scale * c, domain.ndim)


def smooth_vector_block(domain, rng, scale=1.0, decay=1.5):
    """Random vector block with power-law decaying spectrum.

    Normalized so the max-norm of the spatial realization equals ``scale``.
    """
    from blreg.spectral import max_abs

    c = random_vector_block(domain, rng)
    freqs = domain.frequencies()
    k2 = np.zeros(domain.block_shape)
    for ax, f in enumerate(freqs):
        shape = [1] * domain.ndim
        shape[ax] = f.size
        k2 = k2 + (f.astype(float) ** 2).reshape(shape)
    c = c / (1.0 + k2) ** decay
    return c * (scale / max_abs(domain, c))


def fourier_sum(domain, coeffs, points):
    """Direct evaluation of the truncated Fourier sum at arbitrary points.

    ``points`` has shape (npts, d); returns real values of shape (npts,)
    for a scalar block.  This is the slow reference for ``include``.
    """
    freqs = domain.frequencies()
    npts = points.shape[0]
    vals = np.zeros(npts, dtype=np.complex128)
    it = np.ndindex(*domain.block_shape)
    for idx in it:
        k = np.array([freqs[ax][idx[ax]] for ax in range(domain.ndim)], dtype=float)
        phase = np.exp(2j * np.pi * points @ k)
        vals += coeffs[idx] * phase
    return vals.real


def grid_points(domain):
    axes = [np.arange(n) / n for n in domain.shape]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def brute_force_convolution(domain, a, b):
    """O(K^2) truncated convolution of two scalar blocks by direct summation.

    out(k) = sum over k1 + k2 = k with k1, k2 inside the band.
    """
    freqs = domain.frequencies()
    d = domain.ndim
    bw = domain.bandwidth
    out = np.zeros_like(a)

    def freq_of(idx):
        return tuple(int(freqs[ax][idx[ax]]) for ax in range(d))

    def idx_of(freq):
        return tuple(int(np.mod(freq[ax], domain.block_shape[ax])) for ax in range(d))

    for i1 in np.ndindex(*domain.block_shape):
        k1 = freq_of(i1)
        for i2 in np.ndindex(*domain.block_shape):
            k2 = freq_of(i2)
            k = tuple(k1[ax] + k2[ax] for ax in range(d))
            if all(abs(k[ax]) <= bw[ax] for ax in range(d)):
                out[idx_of(k)] += a[i1] * b[i2]
    return out


def make_domain(shape, bandwidth, **kw):
    return Domain(shape=tuple(shape), bandwidth=tuple(bandwidth), **kw)


def band_image(domain, rng, decay=3.0, amp=1.0):
    """Smooth positive synthetic image with band-limited spectrum."""
    from blreg.spectral import include

    c = smooth_vector_block(domain, rng, 1.0, decay=decay)[0]
    img = include(domain, c)
    img = img - img.min()
    return amp * img / img.max()


def smooth_flow(domain, rng, amp=0.04, n_steps=32, stationary=True, gamma=0, decay=3.0):
    """Velocity flow smooth in space and time, for derivative checks."""
    from blreg.spectral import make_divergence_free
    from blreg.transport import TimeFlow

    if stationary:
        vals = smooth_vector_block(domain, rng, amp, decay=decay)[None]
    else:
        a = smooth_vector_block(domain, rng, amp, decay=decay)
        b = smooth_vector_block(domain, rng, amp, decay=decay)
        c = smooth_vector_block(domain, rng, amp, decay=decay)
        t = np.arange(n_steps + 1) / n_steps
        vals = (a[None] + b[None] * np.sin(np.pi * t)[:, None, None, None]
                + c[None] * (t ** 2)[:, None, None, None])
    flow = TimeFlow(domain, vals, n_steps, stationary)
    if gamma:
        flow = flow.map_nodes(lambda x: make_divergence_free(domain, x))
    return flow


def tight_config(gamma=0, n_steps=32, contraction="transposed", sigma2=1.0):
    """Discretization where the energy is smooth and adjoint-consistent."""
    from blreg.objectives import ProblemConfig

    return ProblemConfig(sigma2=sigma2, gamma=gamma, n_time_steps=n_steps,
                         interp="fourier", image_grad="spectral",
                         quadrature="simpson", contraction=contraction)
