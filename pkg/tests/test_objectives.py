"""Energy, gradient and Hessian-vector products of both objectives."""

import numpy as np
import pytest

from blreg import spectral
from blreg.objectives import DeformationObjective, ProblemConfig, StateObjective
from blreg.transport import TimeFlow, flow_inner

from helpers import band_image, make_domain, smooth_flow, smooth_vector_block, tight_config

DOM = make_domain((32, 32), (8, 8), alpha=0.05, order=2)


def _images(seed=0):
    rng = np.random.default_rng(seed)
    return band_image(DOM, rng), band_image(DOM, rng)


def _objective(cls, gamma=0, contraction="transposed", sigma2=1.0, n_steps=32, images=None):
    I0, I1 = images if images is not None else _images()
    return cls(DOM, I0, I1, tight_config(gamma, n_steps, contraction, sigma2))


class TestEnergy:
    def test_zero_velocity_identical_images(self):
        I0, _ = _images()
        obj = StateObjective(DOM, I0, I0, ProblemConfig())
        assert obj.energy(TimeFlow.zero(DOM)) == pytest.approx(0.0, abs=1e-14)

    def test_zero_velocity_reduces_to_image_mismatch(self):
        I0, I1 = _images()
        sigma2 = 0.7
        obj = StateObjective(DOM, I0, I1, ProblemConfig(sigma2=sigma2))
        expected = spectral.grid_norm2(DOM, I0 - I1) / sigma2
        assert obj.energy(TimeFlow.zero(DOM)) == pytest.approx(expected, rel=1e-12)

    def test_uniform_translation_closed_form(self):
        # DC velocity c: map is exactly id - t c, so for a target equal to
        # the source translated by c the data term vanishes and the energy
        # equals the metric cost of the constant field, |c|^2 / 2
        rng = np.random.default_rng(3)
        I0 = band_image(DOM, rng)
        c = (0.06, -0.04)
        shift = np.zeros((2,) + DOM.shape)
        shift[0], shift[1] = -c[0], -c[1]
        from blreg import gridops

        I1 = gridops.fourier_warp(DOM, I0, shift)
        obj = _objective(StateObjective, images=(I0, I1))
        v = DOM.zero_vector()
        v[0, 0, 0], v[1, 0, 0] = c
        flow = TimeFlow(DOM, v[None], 32, True)
        expected = 0.5 * (c[0] ** 2 + c[1] ** 2)
        assert obj.energy(flow) == pytest.approx(expected, rel=1e-6)

    def test_not_finite_adjoint_rejected(self):
        I0, I1 = _images()
        obj = StateObjective(DOM, I0, I1, ProblemConfig(sigma2=1e-320))
        with pytest.raises(ValueError):
            obj.gradient(TimeFlow.zero(DOM))


@pytest.mark.parametrize("cls", [StateObjective, DeformationObjective])
class TestGradientBasics:
    def test_zero_at_global_minimum(self, cls):
        I0, _ = _images()
        obj = cls(DOM, I0, I0, tight_config())
        ev = obj.gradient(TimeFlow.zero(DOM))
        assert np.max(np.abs(ev.gradient.values)) < 1e-14
        assert ev.energy == pytest.approx(0.0, abs=1e-14)

    def test_zero_velocity_collapses_to_endpoint_term(self, cls):
        I0, I1 = _images()
        sigma2 = 1.3
        obj = cls(DOM, I0, I1, tight_config(sigma2=sigma2))
        ev = obj.gradient(TimeFlow.zero(DOM))
        lam = -(2.0 / sigma2) * (I0 - I1)
        grad_I0 = spectral.include(
            DOM, spectral.spectral_gradient(DOM, spectral.project(DOM, I0)))
        expected = spectral.project(DOM, lam[None] * grad_I0)
        np.testing.assert_allclose(ev.gradient.values[0], expected, rtol=0, atol=1e-10)


@pytest.mark.parametrize("cls", [StateObjective, DeformationObjective])
@pytest.mark.parametrize("gamma", [0, 1])
class TestGradientFiniteDifference:
    def test_stationary(self, cls, gamma):
        obj = _objective(cls, gamma=gamma)
        rng = np.random.default_rng(11)
        v = smooth_flow(DOM, rng, gamma=gamma)
        ev = obj.gradient(v)
        eps = 1e-4
        for _ in range(4):
            w = smooth_flow(DOM, rng, gamma=gamma)
            pred = flow_inner(ev.gradient, w, "simpson")
            fd = (obj.energy(v + eps * w) - obj.energy(v - eps * w)) / (2 * eps)
            assert abs(pred - fd) / abs(fd) < 1e-6


class TestGradientConvergenceOrder:
    def test_second_order_in_eps(self):
        obj = _objective(StateObjective)
        rng = np.random.default_rng(12)
        v = smooth_flow(DOM, rng)
        w = smooth_flow(DOM, rng)
        ev = obj.gradient(v)
        pred = flow_inner(ev.gradient, w, "simpson")
        errs = []
        for eps in (3e-2, 1e-2, 3e-3):
            fd = (obj.energy(v + eps * w) - obj.energy(v - eps * w)) / (2 * eps)
            errs.append(abs(pred - fd) / abs(fd))
        slope = np.log(errs[0] / errs[-1]) / np.log(10.0)
        assert 1.8 < slope < 2.2


@pytest.mark.parametrize("cls", [StateObjective, DeformationObjective])
class TestHessianVector:
    def test_zero_direction(self, cls):
        obj = _objective(cls)
        rng = np.random.default_rng(13)
        v = smooth_flow(DOM, rng)
        ev = obj.gradient(v)
        for gn in (False, True):
            hv = ev.hessian_vector(TimeFlow.zero(DOM, 32), gauss_newton=gn)
            np.testing.assert_allclose(hv.values, 0.0, atol=1e-14)

    def test_superposition(self, cls):
        obj = _objective(cls)
        rng = np.random.default_rng(14)
        v = smooth_flow(DOM, rng)
        ev = obj.gradient(v)
        w1 = smooth_flow(DOM, rng)
        w2 = smooth_flow(DOM, rng)
        for gn in (False, True):
            lhs = ev.hessian_vector(2.0 * w1 - 3.0 * w2, gauss_newton=gn)
            rhs = (2.0 * ev.hessian_vector(w1, gauss_newton=gn)
                   - 3.0 * ev.hessian_vector(w2, gauss_newton=gn))
            scale = np.max(np.abs(lhs.values))
            np.testing.assert_allclose(lhs.values, rhs.values, rtol=0, atol=1e-12 * scale)

    def test_newton_matches_gradient_finite_difference(self, cls):
        obj = _objective(cls)
        rng = np.random.default_rng(15)
        v = smooth_flow(DOM, rng)
        ev = obj.gradient(v)
        w = smooth_flow(DOM, rng)
        hv = ev.hessian_vector(w, gauss_newton=False)
        eps = 1e-4
        gp = obj.gradient(v + eps * w).gradient
        gm = obj.gradient(v - eps * w).gradient
        fd = (1.0 / (2 * eps)) * (gp - gm)
        num = np.sqrt(flow_inner(hv - fd, hv - fd, "simpson"))
        den = np.sqrt(flow_inner(hv, hv, "simpson"))
        assert num / den < 1e-4

    def test_newton_symmetry(self, cls):
        obj = _objective(cls)
        rng = np.random.default_rng(16)
        v = smooth_flow(DOM, rng, amp=0.03)
        ev = obj.gradient(v)
        for _ in range(3):
            w1 = smooth_flow(DOM, rng, amp=0.03)
            w2 = smooth_flow(DOM, rng, amp=0.03)
            a = flow_inner(ev.hessian_vector(w1), w2, "simpson")
            b = flow_inner(w1, ev.hessian_vector(w2), "simpson")
            assert abs(a - b) <= 1e-8 * max(abs(a), abs(b))

    def test_gauss_newton_curvature_bound(self, cls):
        obj = _objective(cls)
        rng = np.random.default_rng(17)
        v = smooth_flow(DOM, rng, amp=0.05)
        ev = obj.gradient(v)
        for _ in range(10):
            w_vals = smooth_vector_block(DOM, rng, 1.0, decay=1.0)[None]
            w = TimeFlow(DOM, w_vals, 32, True)
            hw = ev.hessian_vector(w, gauss_newton=True)
            quad = flow_inner(hw, w, "simpson")
            lw = w.map_nodes(lambda c: spectral.apply_helmholtz(DOM, c))
            ref = flow_inner(lw, w, "simpson")
            assert quad >= (1.0 - 1e-8) * ref

    def test_divergence_free_outputs_when_constrained(self, cls):
        obj = _objective(cls, gamma=1)
        rng = np.random.default_rng(18)
        v = smooth_flow(DOM, rng, gamma=1)
        ev = obj.gradient(v)
        assert ev.gradient.max_divergence() < 1e-12
        w = smooth_flow(DOM, rng, gamma=1)
        for gn in (False, True):
            hv = ev.hessian_vector(w, gauss_newton=gn)
            assert hv.max_divergence() < 1e-12

    def test_stale_cache_rejected(self, cls):
        obj = _objective(cls)
        rng = np.random.default_rng(19)
        v = smooth_flow(DOM, rng)
        ev = obj.gradient(v)
        ev.cache.velocity = 2.0 * v  # simulate a stale evaluation
        with pytest.raises(ValueError):
            ev.hessian_vector(smooth_flow(DOM, rng))


class TestNonstationaryGradient:
    # time-varying flows need a fine node grid before the node-sampled
    # adjoint quadrature resolves the pairing to 1e-6
    @pytest.mark.parametrize("cls", [StateObjective, DeformationObjective])
    def test_finite_difference(self, cls):
        n_steps = 1024
        obj = _objective(cls, n_steps=n_steps)
        rng = np.random.default_rng(20)
        v = smooth_flow(DOM, rng, amp=0.035, n_steps=n_steps, stationary=False)
        ev = obj.gradient(v)
        eps = 1e-4
        w = smooth_flow(DOM, rng, amp=0.035, n_steps=n_steps, stationary=False)
        pred = flow_inner(ev.gradient, w, "simpson")
        fd = (obj.energy(v + eps * w) - obj.energy(v - eps * w)) / (2 * eps)
        assert abs(pred - fd) / abs(fd) < 1e-6


class TestFormulationAgreement:
    def test_gradients_coincide_at_zero_velocity(self):
        I0, I1 = _images()
        for contraction in ("transposed", "direct"):
            a = StateObjective(DOM, I0, I1, tight_config())
            b = DeformationObjective(DOM, I0, I1, tight_config(contraction=contraction))
            ga = a.gradient(TimeFlow.zero(DOM)).gradient
            gb = b.gradient(TimeFlow.zero(DOM)).gradient
            scale = np.max(np.abs(ga.values))
            np.testing.assert_allclose(ga.values, gb.values, rtol=0, atol=1e-10 * scale)

    def test_direct_contraction_fails_fd_where_transposed_passes(self):
        # the arbiter for the Jacobian-contraction ambiguity: only the
        # transposed pairing is the exact dual of the map linearization
        rng = np.random.default_rng(21)
        v = smooth_flow(DOM, rng)
        w = smooth_flow(DOM, rng)
        eps = 1e-4
        rels = {}
        for contraction in ("transposed", "direct"):
            obj = _objective(DeformationObjective, contraction=contraction)
            ev = obj.gradient(v)
            pred = flow_inner(ev.gradient, w, "simpson")
            fd = (obj.energy(v + eps * w) - obj.energy(v - eps * w)) / (2 * eps)
            rels[contraction] = abs(pred - fd) / abs(fd)
        assert rels["transposed"] < 1e-6
        assert rels["direct"] > 1e-3


class TestEvaluationContents:
    def test_energy_split_and_caches(self):
        obj = _objective(StateObjective)
        rng = np.random.default_rng(22)
        v = smooth_flow(DOM, rng)
        ev = obj.gradient(v)
        assert ev.energy == pytest.approx(ev.reg_energy + ev.data_energy)
        assert ev.energy == pytest.approx(obj.energy(v), rel=1e-12)
        assert ev.warped_source.shape == DOM.shape
        assert ev.cache.forward.shape[0] == v.n_nodes
