"""Full-grid reference path: independent check of the adjoint formulation."""

import numpy as np

from blreg import spectral
from blreg.objectives import StateObjective
from blreg.objectives.reference import reference_energy, reference_gradient
from blreg.transport import TimeFlow

from helpers import band_image, make_domain, smooth_vector_block, tight_config

DOM = make_domain((32, 32), (8, 8), alpha=0.05, order=2)


def _setup(seed=0):
    rng = np.random.default_rng(seed)
    return rng, band_image(DOM, rng), band_image(DOM, rng)


def test_reference_gradient_passes_finite_difference():
    rng, I0, I1 = _setup()
    v = spectral.include(DOM, smooth_vector_block(DOM, rng, 0.04, decay=3.0))
    g = reference_gradient(DOM, v, I0, I1, 1.0)
    eps = 1e-4
    for _ in range(3):
        w = spectral.include(DOM, smooth_vector_block(DOM, rng, 0.04, decay=3.0))
        pred = DOM.cell_volume * np.sum(g * w)
        fd = (reference_energy(DOM, v + eps * w, I0, I1, 1.0)
              - reference_energy(DOM, v - eps * w, I0, I1, 1.0)) / (2 * eps)
        assert abs(pred - fd) / abs(fd) < 1e-8


def test_band_limited_gradient_matches_projected_reference():
    # truncation is the only difference on smooth, well-resolved problems
    rng, I0, I1 = _setup()
    v_block = smooth_vector_block(DOM, rng, 0.04, decay=3.0)
    obj = StateObjective(DOM, I0, I1, tight_config())
    ev = obj.gradient(TimeFlow(DOM, v_block[None], 32, True))
    g_full = reference_gradient(DOM, spectral.include(DOM, v_block), I0, I1, 1.0)
    g_proj = spectral.project(DOM, g_full)
    scale = np.max(np.abs(ev.gradient.values[0]))
    assert np.max(np.abs(g_proj - ev.gradient.values[0])) < 1e-5 * scale


def test_exact_agreement_at_zero_velocity():
    _, I0, I1 = _setup()
    obj = StateObjective(DOM, I0, I1, tight_config())
    ev = obj.gradient(TimeFlow.zero(DOM))
    g_full = reference_gradient(DOM, np.zeros((2,) + DOM.shape), I0, I1, 1.0)
    g_proj = spectral.project(DOM, g_full)
    scale = np.max(np.abs(ev.gradient.values[0]))
    np.testing.assert_allclose(ev.gradient.values[0], g_proj, rtol=0, atol=1e-12 * scale)
