"""Shared machinery of the two registration objectives.

Both objectives minimize

    E(v) = 1/2 int_0^1 <L v_t, v_t> dt + 1/sigma2 * ||m(1) - target||^2

over band-limited velocity flows, where ``m(t) = source(id + u(t))`` is the
source image pulled through the flow and ``L`` is the Sobolev metric
operator.  They differ in the adjoint system used for the data term: one
transports a scalar adjoint image backward, the other a vector momentum.
With ``gamma = 1`` the flow is constrained divergence-free and gradients
and Hessian products are returned Leray-projected, which realizes the
pressure multiplier by elimination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import gridops, spectral, transport
from ..domain import Domain
from ..transport import TimeFlow, TrajectoryCache


@dataclass(frozen=True)
class ProblemConfig:
    """Weights, constraint switch and discretization options.

    ``interp``, ``image_grad`` and ``quadrature`` select the spatial
    interpolation for warps, the gradient stencil for warped images and the
    time quadrature.  The defaults (linear, central, trapezoid) are the
    production settings; derivative checks run with the smooth variants
    (fourier, spectral, simpson) where the discrete energy is smooth enough
    for tight finite-difference comparisons.
    """

    sigma2: float = 1.0
    gamma: int = 0
    n_time_steps: int = 10
    interp: str = "linear"
    image_grad: str = "central"
    quadrature: str = "trapezoid"
    cfl_limit: float = 0.5
    auto_refine: bool = True
    contraction: str = "transposed"

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.gamma not in (0, 1):
            raise ValueError("gamma must be 0 or 1")
        if self.n_time_steps < 1:
            raise ValueError("n_time_steps must be >= 1")
        if self.interp not in ("linear", "cubic", "fourier"):
            raise ValueError(f"unknown interpolation {self.interp!r}")
        if self.image_grad not in ("central", "spectral"):
            raise ValueError(f"unknown image gradient mode {self.image_grad!r}")
        if self.quadrature not in ("trapezoid", "simpson"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")
        if self.quadrature == "simpson" and self.n_time_steps % 2 != 0:
            raise ValueError("simpson quadrature needs an even number of time steps")
        if self.contraction not in ("transposed", "direct"):
            raise ValueError(f"unknown contraction {self.contraction!r}")


class Evaluation:
    """Energy, gradient and cached trajectories at one velocity flow.

    Immutable after construction; ``hessian_vector`` may be called
    concurrently from several threads against the same evaluation.
    """

    def __init__(self, objective, velocity: TimeFlow, energy: float, reg_energy: float,
                 data_energy: float, gradient: TimeFlow, warped_source: np.ndarray,
                 adjoint_end: np.ndarray, cache: TrajectoryCache):
        self.objective = objective
        self.velocity = velocity
        self.energy = energy
        self.reg_energy = reg_energy
        self.data_energy = data_energy
        self.gradient = gradient
        self.warped_source = warped_source
        self.adjoint_end = adjoint_end
        self.cache = cache

    def hessian_vector(self, direction: TimeFlow, gauss_newton: bool = False) -> TimeFlow:
        return self.objective.hessian_vector(self, direction, gauss_newton=gauss_newton)


class BaseObjective:
    """Common pipeline pieces; subclasses supply the adjoint system."""

    def __init__(self, domain: Domain, source: np.ndarray, target: np.ndarray,
                 config: ProblemConfig | None = None):
        config = config or ProblemConfig()
        source = np.ascontiguousarray(source, dtype=np.float64)
        target = np.ascontiguousarray(target, dtype=np.float64)
        if source.shape != domain.shape or target.shape != domain.shape:
            raise ValueError("images must be scalar fields on the domain grid")
        if not (np.all(np.isfinite(source)) and np.all(np.isfinite(target))):
            raise ValueError("images contain NaN or Inf")
        self.domain = domain
        self.source = source
        self.target = target
        self.config = config
        self._source_grad = None

    # -- helpers -----------------------------------------------------------

    @property
    def source_gradient(self) -> np.ndarray:
        if self._source_grad is None:
            self._source_grad = gridops.spatial_gradient(
                self.domain, self.source, mode=self.config.image_grad
            )
        return self._source_grad

    def _substeps(self, v: TimeFlow) -> int:
        return transport.resolve_substeps(v, self.config.cfl_limit, self.config.auto_refine)

    def _weights(self, v: TimeFlow) -> np.ndarray:
        return transport.time_weights(v.n_steps, self.config.quadrature)

    def _warp(self, values: np.ndarray, disp_block: np.ndarray) -> np.ndarray:
        disp = spectral.include(self.domain, disp_block, check=False)
        return gridops.warp(self.domain, values, disp, interp=self.config.interp)

    def _warp_grid(self, values: np.ndarray, disp_grid: np.ndarray) -> np.ndarray:
        return gridops.warp(self.domain, values, disp_grid, interp=self.config.interp)

    def _grid_grad(self, values: np.ndarray) -> np.ndarray:
        return gridops.spatial_gradient(self.domain, values, mode=self.config.image_grad)

    def _adjoint_endpoint(self, warped_end: np.ndarray) -> np.ndarray:
        lam = -(2.0 / self.config.sigma2) * (warped_end - self.target)
        if not np.all(np.isfinite(lam)):
            raise ValueError("adjoint endpoint is not finite; sigma2 may be too small")
        return lam

    def _reg_energy(self, v: TimeFlow) -> float:
        if v.stationary:
            lv = spectral.apply_helmholtz(self.domain, v.values[0])
            return 0.5 * spectral.inner(lv, v.values[0])
        w = self._weights(v)
        total = 0.0
        for i in range(v.n_nodes):
            lv = spectral.apply_helmholtz(self.domain, v.values[i])
            total += w[i] * spectral.inner(lv, v.values[i])
        return 0.5 * total

    def _data_energy(self, warped_end: np.ndarray) -> float:
        diff = warped_end - self.target
        return spectral.grid_norm2(self.domain, diff) / self.config.sigma2

    def _assemble(self, v: TimeFlow, data_nodes: list[np.ndarray]) -> TimeFlow:
        """Combine per-node data terms with the metric term into a flow.

        Stationary flows share one parameter field, so node contributions
        are chained through the quadrature weights.
        """
        dom = self.domain
        project_free = self.config.gamma == 1
        if v.stationary:
            w = self._weights(v)
            data = sum(w[i] * data_nodes[i] for i in range(v.n_nodes))
            g = spectral.apply_helmholtz(dom, v.values[0]) + data
            if project_free:
                g = spectral.make_divergence_free(dom, g)
            values = g[None]
        else:
            values = np.empty_like(v.values)
            for i in range(v.n_nodes):
                g = spectral.apply_helmholtz(dom, v.values[i]) + data_nodes[i]
                if project_free:
                    g = spectral.make_divergence_free(dom, g)
                values[i] = g
        return TimeFlow(dom, values, v.n_steps, v.stationary)

    # -- public surface ----------------------------------------------------

    def energy(self, v: TimeFlow) -> float:
        """Objective value at ``v``; forward transport only."""
        substeps = self._substeps(v)
        phi = transport.integrate_forward_map(v, substeps)
        warped = self._warp(self.source, phi[-1])
        return self._reg_energy(v) + self._data_energy(warped)

    def gradient(self, v: TimeFlow) -> Evaluation:
        raise NotImplementedError

    def hessian_vector(self, evaluation: Evaluation, direction: TimeFlow,
                       gauss_newton: bool = False) -> TimeFlow:
        raise NotImplementedError
