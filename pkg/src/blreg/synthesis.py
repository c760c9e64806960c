"""Deterministic synthetic image pairs for tests and demonstrations.

All images are smooth, periodic, rest in [0, 1] and are generated in
float64 on the unit box.  ``c_to_circle`` also emits matched binary label
volumes for overlap scoring.
"""

from __future__ import annotations

import numpy as np

KINDS = ("translation", "swirl", "c_to_circle")


def _mesh(shape):
    axes = [np.arange(n) / n for n in shape]
    return np.meshgrid(*axes, indexing="ij")


def _periodic_bump(mesh, center, sharpness):
    """Smooth exactly-periodic bump, exp(k (cos(2 pi (x - c)) - 1)) per axis."""
    out = np.ones_like(mesh[0])
    for x, c in zip(mesh, center):
        out = out * np.exp(sharpness * (np.cos(2 * np.pi * (x - c)) - 1.0))
    return out


def _swirl_displacement(mesh, center, angle, width):
    x = mesh[0] - center[0]
    y = mesh[1] - center[1]
    r2 = x * x + y * y
    theta = angle * np.exp(-r2 / (2.0 * width * width))
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    return np.stack([x * (cos_t - 1.0) - y * sin_t, x * sin_t + y * (cos_t - 1.0)])


def synthesize_pair(kind: str, size: int = 64, seed: int = 0, shift: float = 0.1,
                    angle: float = 0.8):
    """Source/target pair of the requested kind plus optional labels.

    ``translation``: one bump translated by ``shift`` along the first axis.
    ``swirl``: a two-bump scene composed with a divergence-free swirl.
    ``c_to_circle``: an annulus with an opening closing into the full ring;
    returns binary labels for both shapes as the third output.
    Deterministic for a fixed seed; the seed perturbs bump placement.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown pair kind {kind!r}; choose from {KINDS}")
    if size < 16:
        raise ValueError("size must be at least 16 per axis")
    shape = (size, size)
    mesh = _mesh(shape)
    rng = np.random.default_rng(seed)
    jitter = 0.02 * rng.standard_normal(2)

    if kind == "translation":
        center = np.array([0.5, 0.5]) + jitter
        source = _periodic_bump(mesh, center, 24.0)
        target = _periodic_bump(mesh, center + np.array([shift, 0.0]), 24.0)
        return source, target, None

    if kind == "swirl":
        c1 = np.array([0.42, 0.45]) + jitter
        c2 = np.array([0.62, 0.60]) + jitter
        source = _periodic_bump(mesh, c1, 30.0) + 0.7 * _periodic_bump(mesh, c2, 50.0)
        source /= source.max()
        disp = _swirl_displacement(mesh, (0.5 + jitter[0], 0.5 + jitter[1]), angle, 0.16)
        warped_mesh = [mesh[0] + disp[0], mesh[1] + disp[1]]
        target = _periodic_bump(warped_mesh, c1, 30.0) + 0.7 * _periodic_bump(warped_mesh, c2, 50.0)
        target /= target.max()
        return source, target, None

    # c_to_circle
    center = np.array([0.5, 0.5]) + jitter
    radius, thickness = 0.22, 0.055
    sharp = 2.0 / thickness

    def ring(opening):
        x = mesh[0] - center[0]
        y = mesh[1] - center[1]
        r = np.sqrt(x * x + y * y)
        band = 1.0 / (1.0 + np.exp(sharp * (np.abs(r - radius) - thickness)))
        if opening > 0.0:
            ang = np.arctan2(y, x)
            gap = 1.0 / (1.0 + np.exp(18.0 * (opening - np.abs(ang))))
            band = band * gap
        return band

    source = ring(opening=0.7)
    target = ring(opening=0.0)
    labels = (source > 0.5).astype(np.int32), (target > 0.5).astype(np.int32)
    return source, target, labels
