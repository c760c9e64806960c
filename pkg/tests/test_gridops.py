"""Warping, finite-difference gradients and Jacobian determinants."""

import numpy as np
import pytest
import sympy

from blreg import gridops, spectral
from helpers import make_domain, random_scalar_block


def _grid(n):
    return np.arange(n) / n


class TestWarp:
    def test_identity_map_is_exact(self):
        dom = make_domain((16, 16), (4, 4))
        rng = np.random.default_rng(0)
        f = rng.standard_normal(dom.shape)
        u = np.zeros((2,) + dom.shape)
        np.testing.assert_array_equal(gridops.warp(dom, f, u), f)

    def test_constant_field_stays_constant(self):
        dom = make_domain((16, 16), (4, 4))
        rng = np.random.default_rng(1)
        f = np.full(dom.shape, 3.25)
        u = 0.2 * rng.standard_normal((2,) + dom.shape)
        np.testing.assert_allclose(gridops.warp(dom, f, u), 3.25, rtol=0, atol=1e-12)

    def test_shift_of_sine_within_interpolation_error(self):
        # shift lands halfway between grid nodes; the linear-interpolation
        # error bound of sin on this grid caps the observed error
        n = 10
        dom = make_domain((n,), (2,))
        x = _grid(n)
        f = np.sin(2 * np.pi * x)
        shift = 0.25
        u = np.full((1, n), shift)
        got = gridops.warp(dom, f, u)
        exact = np.sin(2 * np.pi * (x + shift))
        # worst-case linear interpolation error of sin(2 pi x) at midpoints
        bound = 1.0 - np.cos(np.pi / n)
        assert np.max(np.abs(got - exact)) <= bound * 1.0000001
        assert np.max(np.abs(got - exact)) > 0.1 * bound

    def test_warp_is_linear_in_the_image(self):
        dom = make_domain((12, 12), (3, 3))
        rng = np.random.default_rng(2)
        f = rng.standard_normal(dom.shape)
        g = rng.standard_normal(dom.shape)
        u = 0.1 * rng.standard_normal((2,) + dom.shape)
        lhs = gridops.warp(dom, 2.0 * f + 3.0 * g, u)
        rhs = 2.0 * gridops.warp(dom, f, u) + 3.0 * gridops.warp(dom, g, u)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)

    def test_fourier_warp_is_exact_on_bandlimited_fields(self):
        dom = make_domain((16, 16), (4, 4))
        rng = np.random.default_rng(3)
        c = random_scalar_block(dom, rng)
        f = spectral.include(dom, c)
        u = 0.07 * np.stack(
            [np.cos(2 * np.pi * _grid(16))[:, None] * np.ones(16),
             np.sin(2 * np.pi * _grid(16))[None, :] * np.ones(16)[:, None]]
        )
        got = gridops.fourier_warp(dom, f, u)
        # direct truncated Fourier sum at the warped points
        from helpers import fourier_sum

        base = np.stack(np.meshgrid(_grid(16), _grid(16), indexing="ij"), axis=-1)
        pts = base.reshape(-1, 2) + np.moveaxis(u, 0, -1).reshape(-1, 2)
        exact = fourier_sum(dom, c, pts).reshape(dom.shape)
        np.testing.assert_allclose(got, exact, rtol=0, atol=1e-11)

    def test_fourier_warp_1d_even_grid(self):
        dom = make_domain((8,), (2,))
        x = _grid(8)
        f = np.cos(2 * np.pi * x)
        u = np.full((1, 8), 0.1)
        got = gridops.fourier_warp(dom, f, u)
        np.testing.assert_allclose(got, np.cos(2 * np.pi * (x + 0.1)), atol=1e-12)

    def test_cubic_and_nearest_modes(self):
        dom = make_domain((16, 16), (4, 4))
        rng = np.random.default_rng(4)
        f = rng.standard_normal(dom.shape)
        u = np.zeros((2,) + dom.shape)
        np.testing.assert_allclose(gridops.warp(dom, f, u, interp="cubic"), f, atol=1e-12)
        np.testing.assert_array_equal(gridops.warp(dom, f, u, interp="nearest"), f)
        with pytest.raises(ValueError):
            gridops.warp(dom, f, u, interp="quintic")


class TestSpatialGradient:
    def test_gradient_of_constant_is_zero(self):
        dom = make_domain((16, 16), (4, 4))
        f = np.full(dom.shape, 7.0)
        np.testing.assert_allclose(gridops.spatial_gradient(dom, f), 0.0, atol=1e-12)

    def test_sawtooth_interior_slope(self):
        n = 16
        dom = make_domain((n, n), (4, 4))
        x = _grid(n)
        f = np.tile(x[:, None], (1, n))  # linear in x, wraps at the seam
        g = gridops.spatial_gradient(dom, f)
        interior = g[0][1:-1, :]
        np.testing.assert_allclose(interior, 1.0, rtol=0, atol=1e-12)
        np.testing.assert_allclose(g[1], 0.0, atol=1e-12)

    def test_second_order_convergence_on_sine(self):
        errs = []
        for n in (16, 32, 64):
            dom = make_domain((n,), (4,))
            x = _grid(n)
            g = gridops.spatial_gradient(dom, np.sin(2 * np.pi * x))[0]
            errs.append(np.max(np.abs(g - 2 * np.pi * np.cos(2 * np.pi * x))))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)

    def test_spectral_mode_is_exact_on_bandlimited(self):
        dom = make_domain((16, 16), (4, 4))
        rng = np.random.default_rng(5)
        c = random_scalar_block(dom, rng)
        f = spectral.include(dom, c)
        g = gridops.spatial_gradient(dom, f, mode="spectral")
        expected = spectral.include(dom, spectral.spectral_gradient(dom, c))
        np.testing.assert_allclose(g, expected, rtol=0, atol=1e-10)

    def test_agrees_with_spectral_gradient_at_second_order(self):
        errs = []
        for n in (32, 64):
            dom = make_domain((n, n), (3, 3))
            rng = np.random.default_rng(6)
            c = random_scalar_block(dom, rng)
            f = spectral.include(dom, c)
            g_fd = gridops.spatial_gradient(dom, f)
            g_sp = spectral.include(dom, spectral.spectral_gradient(dom, c))
            errs.append(np.max(np.abs(g_fd - g_sp)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


class TestJacobianDeterminant:
    def test_identity_map(self):
        dom = make_domain((16, 16), (4, 4))
        u = np.zeros((2,) + dom.shape)
        np.testing.assert_allclose(gridops.jacobian_determinant(dom, u), 1.0, atol=1e-14)

    def test_uniform_dilation_interior(self):
        n = 32
        dom = make_domain((n, n), (4, 4))
        x = _grid(n)
        u = np.zeros((2,) + dom.shape)
        u[0] = 0.1 * np.tile(x[:, None], (1, n))  # x -> 1.1 x, sawtooth wrap
        det = gridops.jacobian_determinant(dom, u)
        np.testing.assert_allclose(det[2:-2, :], 1.1, rtol=0, atol=1e-10)

    def test_translation_leaves_determinant_one(self):
        dom = make_domain((16, 16), (4, 4))
        u = np.zeros((2,) + dom.shape)
        u[0] = 0.07
        u[1] = -0.03
        np.testing.assert_allclose(gridops.jacobian_determinant(dom, u), 1.0, atol=1e-13)

    def test_swirl_against_symbolic_determinant(self):
        # analytic swirl displacement; sympy supplies the exact determinant
        sx, sy = sympy.symbols("sx sy")
        cx = cy = sympy.Rational(1, 2)
        r2 = (sx - cx) ** 2 + (sy - cy) ** 2
        amp = sympy.Rational(1, 10)
        width2 = sympy.Rational(1, 100)
        theta = amp * sympy.exp(-r2 / (2 * width2))
        ux = (sx - cx) * (sympy.cos(theta) - 1) - (sy - cy) * sympy.sin(theta)
        uy = (sx - cx) * sympy.sin(theta) + (sy - cy) * (sympy.cos(theta) - 1)
        phi = sympy.Matrix([sx + ux, sy + uy])
        det_expr = phi.jacobian([sx, sy]).det()
        det_fn = sympy.lambdify((sx, sy), sympy.simplify(det_expr), "numpy")
        ux_fn = sympy.lambdify((sx, sy), ux, "numpy")
        uy_fn = sympy.lambdify((sx, sy), uy, "numpy")

        errs = []
        for n in (32, 64):
            dom = make_domain((n, n), (4, 4))
            xg, yg = np.meshgrid(_grid(n), _grid(n), indexing="ij")
            u = np.stack([ux_fn(xg, yg), uy_fn(xg, yg)])
            det = gridops.jacobian_determinant(dom, u)
            errs.append(np.max(np.abs(det - det_fn(xg, yg))))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)
