"""Core algebra of band-limited fields.

Coefficient blocks are complex arrays in FFT (wrap-around) frequency order,
one block per component: scalar fields have shape ``block_shape``, vector
fields ``(d, *block_shape)`` and Jacobian-like matrices ``(d, d, *block_shape)``.
A field is valid when it satisfies conjugate symmetry,
``coeff(-k) == conj(coeff(k))``, so that its spatial realization is real.

``include`` realizes a block on a grid (zero-pad plus inverse FFT) and
``project`` is its adjoint (FFT plus truncation) under the inner products

* spectral: ``Re sum_k a(k) * conj(b(k))`` over all components,
* spatial:  ``cell_volume * sum_x f(x) * g(x)``,

which agree through ``include`` by Parseval's identity.  Products of fields
(the truncated convolution) are evaluated on a padded grid of at least
``4*K_j + 1`` points per axis so the result is the exact truncated
convolution of the spectra, free of aliasing.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft

from .domain import Domain

_TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# symmetry handling
# ---------------------------------------------------------------------------

def conjugate_reverse(coeffs: np.ndarray, ndim: int) -> np.ndarray:
    """Return ``conj(coeffs(-k))`` on the trailing ``ndim`` block axes."""
    out = coeffs
    for ax in range(-ndim, 0):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


def symmetrize(coeffs: np.ndarray, ndim: int) -> np.ndarray:
    """Project onto the conjugate-symmetric subspace (real spatial part)."""
    return 0.5 * (coeffs + conjugate_reverse(coeffs, ndim))


def symmetry_error(coeffs: np.ndarray, ndim: int) -> float:
    """Relative conjugate-symmetry violation."""
    scale = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    if scale == 0.0:
        return 0.0
    err = float(np.max(np.abs(coeffs - conjugate_reverse(coeffs, ndim))))
    return err / scale


# ---------------------------------------------------------------------------
# inclusion / projection
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _embed_plan(block_shape: tuple[int, ...], grid_shape: tuple[int, ...]):
    """Index map from block bins to grid bins plus gather weights.

    When ``2*K_j >= P_j`` the frequencies ``+K_j`` and ``-K_j`` alias to the
    same grid bin; scattering adds them and gathering splits the bin evenly,
    which keeps project(include(.)) the identity on canonical fields.
    """
    from .domain import _frequencies

    freqs = _frequencies(block_shape)
    index = []
    weights = []
    collisions = False
    for f, p in zip(freqs, grid_shape):
        idx = np.mod(f, p)
        counts = np.bincount(idx, minlength=p)
        collisions = collisions or bool(np.any(counts > 1))
        index.append(idx)
        weights.append(1.0 / counts[idx])
    w = weights[0]
    for extra in weights[1:]:
        w = np.multiply.outer(w, extra)
    return tuple(index), w, collisions


def include(domain: Domain, coeffs: np.ndarray, grid_shape: tuple[int, ...] | None = None,
            check: bool = True) -> np.ndarray:
    """Realize a coefficient block as a real field on the full grid.

    Components on leading axes are transformed together.  Raises
    ``ValueError`` when the conjugate-symmetry violation exceeds 1e-10,
    which signals a corrupted spectrum.
    """
    if grid_shape is None:
        grid_shape = domain.shape
    d = domain.ndim
    if coeffs.shape[-d:] != domain.block_shape:
        raise ValueError(
            f"block shape {coeffs.shape[-d:]} does not match domain {domain.block_shape}"
        )
    if check and symmetry_error(coeffs, d) > 1e-10:
        raise ValueError("coefficients violate conjugate symmetry; spectrum is corrupted")
    lead = coeffs.shape[:-d]
    comps = coeffs.reshape((-1,) + coeffs.shape[-d:])
    index, _, collisions = _embed_plan(domain.block_shape, tuple(grid_shape))
    full = np.zeros((comps.shape[0],) + tuple(grid_shape), dtype=np.complex128)
    dest = (slice(None),) + np.ix_(*index)
    if collisions:
        for i in range(comps.shape[0]):
            np.add.at(full[i], np.ix_(*index), comps[i])
    else:
        full[dest] = comps
    axes = tuple(range(1, d + 1))
    spatial = scipy.fft.ifftn(full, axes=axes, overwrite_x=True).real
    spatial *= float(np.prod(grid_shape))
    return np.ascontiguousarray(spatial.reshape(lead + tuple(grid_shape)))


def project(domain: Domain, values: np.ndarray, grid_shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Band-limit a real grid field: forward FFT, truncate, symmetrize."""
    if grid_shape is None:
        grid_shape = domain.shape
    d = domain.ndim
    lead = values.shape[:-d]
    comps = values.reshape((-1,) + tuple(grid_shape))
    axes = tuple(range(1, d + 1))
    spec = scipy.fft.fftn(comps, axes=axes)
    spec /= float(np.prod(grid_shape))
    index, weights, _ = _embed_plan(domain.block_shape, tuple(grid_shape))
    out = spec[(slice(None),) + np.ix_(*index)] * weights
    out = symmetrize(out, d)
    return np.ascontiguousarray(out.reshape(lead + domain.block_shape))


# ---------------------------------------------------------------------------
# truncated convolution
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _pad_shape(block_shape: tuple[int, ...]) -> tuple[int, ...]:
    # product of two K-band fields has band 2K: 4K+1 samples avoid aliasing
    return tuple(scipy.fft.next_fast_len(2 * (m - 1) + 1) for m in block_shape)


def _to_pad_grid(domain: Domain, coeffs: np.ndarray) -> np.ndarray:
    return include(domain, coeffs, _pad_shape(domain.block_shape), check=False)


def _from_pad_grid(domain: Domain, values: np.ndarray) -> np.ndarray:
    return project(domain, values, _pad_shape(domain.block_shape))


def truncated_convolution(domain: Domain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Band-limited product of two fields, dispatched on operand rank.

    scalar * scalar -> scalar, matrix * vector -> vector (contraction over
    the second matrix axis), vector * scalar -> vector, vector * vector ->
    scalar (dot product).  The product is formed pointwise on the padded
    grid and projected back, which equals the exact truncated convolution.
    """
    d = domain.ndim
    ra, rb = a.ndim - d, b.ndim - d
    if ra == 0 and rb == 0:
        return conv_scalar(domain, a, b)
    if ra == 2 and rb == 1:
        return conv_matvec(domain, a, b)
    if ra == 1 and rb == 0:
        ag = _to_pad_grid(domain, a)
        bg = _to_pad_grid(domain, b)
        return _from_pad_grid(domain, ag * bg[None])
    if ra == 0 and rb == 1:
        return truncated_convolution(domain, b, a)
    if ra == 1 and rb == 1:
        return conv_dot(domain, a, b)
    raise ValueError(f"unsupported operand ranks ({ra}, {rb})")


def conv_scalar(domain: Domain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ag = _to_pad_grid(domain, a)
    bg = _to_pad_grid(domain, b)
    return _from_pad_grid(domain, ag * bg)


def conv_dot(domain: Domain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Componentwise dot product of two vector fields, band-limited."""
    ag = _to_pad_grid(domain, a)
    bg = _to_pad_grid(domain, b)
    return _from_pad_grid(domain, np.sum(ag * bg, axis=0))


def conv_matvec(domain: Domain, mat: np.ndarray, vec: np.ndarray,
                transpose: bool = False) -> np.ndarray:
    """Matrix-vector contraction ``sum_j M[i, j] * v[j]`` (or its transpose)."""
    mg = _to_pad_grid(domain, mat)
    vg = _to_pad_grid(domain, vec)
    spec = "ji...,j...->i..." if transpose else "ij...,j...->i..."
    return _from_pad_grid(domain, np.einsum(spec, mg, vg))


def conv_outer_divergence(domain: Domain, vec_a: np.ndarray, vec_b: np.ndarray) -> np.ndarray:
    """Row divergence of the outer product, ``out_i = sum_j d_j(a_i * b_j)``.

    This is the conservative-transport right-hand side for a vector density.
    """
    ag = _to_pad_grid(domain, vec_a)
    bg = _to_pad_grid(domain, vec_b)
    outer = np.einsum("i...,j...->ij...", ag, bg)
    flux = _from_pad_grid(domain, outer)
    kvecs = _angular_frequencies(domain)
    out = domain.zero_vector()
    for i in range(domain.ndim):
        for j in range(domain.ndim):
            out[i] += 1j * kvecs[j] * flux[i, j]
    return out


# ---------------------------------------------------------------------------
# diagonal operators
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _angular_frequencies_cached(block_shape: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    from .domain import _frequencies

    freqs = _frequencies(block_shape)
    d = len(block_shape)
    out = []
    for ax, f in enumerate(freqs):
        shape = [1] * d
        shape[ax] = f.size
        out.append(_TWO_PI * f.astype(np.float64).reshape(shape))
    return tuple(out)


def _angular_frequencies(domain: Domain) -> tuple[np.ndarray, ...]:
    return _angular_frequencies_cached(domain.block_shape)


@lru_cache(maxsize=None)
def _metric_symbol(domain: Domain) -> np.ndarray:
    from .domain import _frequencies

    freqs = _frequencies(domain.block_shape)
    d = domain.ndim
    acc = np.zeros(domain.block_shape, dtype=np.float64)
    for ax, (f, n) in enumerate(zip(freqs, domain.shape)):
        shape = [1] * d
        shape[ax] = f.size
        if domain.symbol == "discrete":
            term = 2.0 * n * n * (1.0 - np.cos(_TWO_PI * f / n))
        else:
            term = (_TWO_PI * f) ** 2
        acc = acc + term.reshape(shape)
    return 1.0 + domain.alpha * acc


def metric_symbol(domain: Domain) -> np.ndarray:
    """Per-frequency multiplier of the metric operator, ``A(k)**order``."""
    return _metric_symbol(domain) ** domain.order


def apply_helmholtz(domain: Domain, coeffs: np.ndarray) -> np.ndarray:
    """Apply the metric operator ``(Id - alpha*Laplacian)**order``."""
    return coeffs * metric_symbol(domain)


def apply_inverse_helmholtz(domain: Domain, coeffs: np.ndarray) -> np.ndarray:
    """Apply the inverse (smoothing) operator."""
    return coeffs * (_metric_symbol(domain) ** (-domain.order))


def spectral_gradient(domain: Domain, scalar: np.ndarray) -> np.ndarray:
    """Gradient of a band-limited scalar field, exact Fourier symbol."""
    kvecs = _angular_frequencies(domain)
    out = np.empty((domain.ndim,) + domain.block_shape, dtype=np.complex128)
    for ax in range(domain.ndim):
        out[ax] = 1j * kvecs[ax] * scalar
    return out


def spectral_divergence(domain: Domain, vec: np.ndarray) -> np.ndarray:
    kvecs = _angular_frequencies(domain)
    out = domain.zero_scalar()
    for ax in range(domain.ndim):
        out += 1j * kvecs[ax] * vec[ax]
    return out


def spectral_jacobian(domain: Domain, vec: np.ndarray) -> np.ndarray:
    """All first partials of each component, ``out[i, j] = d_j v_i``."""
    kvecs = _angular_frequencies(domain)
    d = domain.ndim
    out = np.empty((d, d) + domain.block_shape, dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            out[i, j] = 1j * kvecs[j] * vec[i]
    return out


@lru_cache(maxsize=None)
def _laplacian_symbol(block_shape: tuple[int, ...]) -> np.ndarray:
    kvecs = _angular_frequencies_cached(block_shape)
    acc = np.zeros(block_shape, dtype=np.float64)
    for kv in kvecs:
        acc = acc - kv ** 2
    return acc


def leray_projection(domain: Domain, vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split off the gradient part: returns ``(w, p)`` with ``div w = 0``.

    ``p`` solves the spectral Poisson equation ``Laplacian p = div v`` with
    the zero-mean gauge ``p(0) = 0``; ``w = v - grad p``.
    """
    div = spectral_divergence(domain, vec)
    lap = _laplacian_symbol(domain.block_shape)
    pressure = np.zeros_like(div)
    nonzero = lap != 0.0
    pressure[nonzero] = div[nonzero] / lap[nonzero]
    w = vec - spectral_gradient(domain, pressure)
    return w, pressure


def make_divergence_free(domain: Domain, vec: np.ndarray) -> np.ndarray:
    return leray_projection(domain, vec)[0]


# ---------------------------------------------------------------------------
# inner products and norms
# ---------------------------------------------------------------------------

def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Hermitian inner product over all coefficients, real part."""
    return float(np.real(np.vdot(b, a)))


def grid_inner(domain: Domain, f: np.ndarray, g: np.ndarray) -> float:
    return domain.cell_volume * float(np.sum(f * g))


def grid_norm2(domain: Domain, f: np.ndarray) -> float:
    return domain.cell_volume * float(np.sum(f * f))


def max_abs(domain: Domain, coeffs: np.ndarray) -> float:
    """Max-norm of the spatial realization."""
    return float(np.max(np.abs(include(domain, coeffs, check=False))))
