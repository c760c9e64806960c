"""Registration objective with the scalar (image) adjoint system.

The data gradient at each time node is ``project(lambda(t) * grad m(t))``
where ``m(t)`` is the warped source and the adjoint image is recovered in
closed form from the end-anchored map and its volume change,

    lambda(t) = vol(t) * lambda(1)(id + w(t)),

instead of integrating the adjoint PDE.  The Hessian-vector product
linearizes the same pipeline; Gauss-Newton mode keeps only the propagated
endpoint variation of the adjoint (the residual-scaled curvature terms are
dropped, which makes the data block positive semidefinite).
"""

from __future__ import annotations

import numpy as np

from .. import gridops, spectral, transport
from ..transport import TimeFlow, TrajectoryCache
from .base import BaseObjective, Evaluation

__all__ = ["StateObjective"]


class StateEvaluation(Evaluation):
    """Per-node caches reused by every Hessian-vector product."""

    def __init__(self, *args, warped_nodes, warped_grads, adjoint_nodes,
                 adjoint_end_warps, volume_grids, inverse_disp_grids,
                 forward_disp_grids, **kwargs):
        super().__init__(*args, **kwargs)
        self.warped_nodes = warped_nodes
        self.warped_grads = warped_grads
        self.adjoint_nodes = adjoint_nodes
        self.adjoint_end_warps = adjoint_end_warps
        self.volume_grids = volume_grids
        self.inverse_disp_grids = inverse_disp_grids
        self.forward_disp_grids = forward_disp_grids
        self._source_grad_warps = None
        self._adjoint_grad_warps = None

    def source_grad_warps(self):
        """Source gradient pulled to every node, for tangent images."""
        if self._source_grad_warps is None:
            obj = self.objective
            grads = obj.source_gradient
            out = []
            for disp in self.forward_disp_grids:
                out.append(np.stack([
                    obj._warp_grid(grads[ax], disp) for ax in range(obj.domain.ndim)
                ]))
            self._source_grad_warps = out
        return self._source_grad_warps

    def adjoint_grad_warps(self):
        """Gradient of the endpoint adjoint pulled to every node."""
        if self._adjoint_grad_warps is None:
            obj = self.objective
            grads = obj._grid_grad(self.adjoint_end)
            out = []
            for disp in self.inverse_disp_grids:
                out.append(np.stack([
                    obj._warp_grid(grads[ax], disp) for ax in range(obj.domain.ndim)
                ]))
            self._adjoint_grad_warps = out
        return self._adjoint_grad_warps


class StateObjective(BaseObjective):
    """Energy, gradient and Hessian products via the scalar adjoint."""

    def gradient(self, v: TimeFlow) -> StateEvaluation:
        dom = self.domain
        substeps = self._substeps(v)
        phi = transport.integrate_forward_map(v, substeps)
        psi, vol = transport.integrate_inverse_map_and_volume(v, substeps)

        forward_disp = [spectral.include(dom, phi[i], check=False) for i in range(phi.shape[0])]
        inverse_disp = [spectral.include(dom, psi[i], check=False) for i in range(psi.shape[0])]
        volume_grids = [spectral.include(dom, vol[i], check=False) for i in range(vol.shape[0])]

        warped = [gridops.warp(dom, self.source, d, interp=self.config.interp)
                  for d in forward_disp]
        lam_end = self._adjoint_endpoint(warped[-1])

        lam_end_warps = [gridops.warp(dom, lam_end, d, interp=self.config.interp)
                         for d in inverse_disp]
        adjoint_nodes = [volume_grids[i] * lam_end_warps[i] for i in range(len(volume_grids))]
        warped_grads = [self._grid_grad(m) for m in warped]

        data_nodes = [
            spectral.project(dom, adjoint_nodes[i][None] * warped_grads[i])
            for i in range(len(adjoint_nodes))
        ]
        grad_flow = self._assemble(v, data_nodes)

        energy_reg = self._reg_energy(v)
        energy_data = self._data_energy(warped[-1])
        cache = TrajectoryCache(velocity=v, substeps=substeps, forward=phi,
                                inverse=psi, volume=vol)
        return StateEvaluation(
            self, v, energy_reg + energy_data, energy_reg, energy_data, grad_flow,
            warped[-1], lam_end, cache,
            warped_nodes=warped, warped_grads=warped_grads, adjoint_nodes=adjoint_nodes,
            adjoint_end_warps=lam_end_warps, volume_grids=volume_grids,
            inverse_disp_grids=inverse_disp, forward_disp_grids=forward_disp,
        )

    def hessian_vector(self, evaluation: StateEvaluation, direction: TimeFlow,
                       gauss_newton: bool = False) -> TimeFlow:
        dom = self.domain
        v = evaluation.velocity
        evaluation.cache.assert_matches(v)
        v._check_compatible(direction)
        substeps = evaluation.cache.substeps

        dphi, dpsi, dvol = transport.integrate_state_tangents(
            v, direction, substeps, with_volume=not gauss_newton
        )
        n_nodes = v.n_nodes
        src_grad_warps = evaluation.source_grad_warps()

        # endpoint variation of the adjoint, propagated to every node
        dphi_end_grid = spectral.include(dom, dphi[-1], check=False)
        dm_end = np.einsum("a...,a...->...", src_grad_warps[-1], dphi_end_grid)
        dlam_end = -(2.0 / self.config.sigma2) * dm_end

        data_nodes = []
        if gauss_newton:
            for i in range(n_nodes):
                dlam = evaluation.volume_grids[i] * self._warp_grid(
                    dlam_end, evaluation.inverse_disp_grids[i]
                )
                data_nodes.append(
                    spectral.project(dom, dlam[None] * evaluation.warped_grads[i])
                )
        else:
            adj_grad_warps = evaluation.adjoint_grad_warps()
            for i in range(n_nodes):
                dphi_grid = spectral.include(dom, dphi[i], check=False)
                dpsi_grid = spectral.include(dom, dpsi[i], check=False)
                dvol_grid = spectral.include(dom, dvol[i], check=False)
                dm = np.einsum("a...,a...->...", src_grad_warps[i], dphi_grid)
                dlam = (
                    dvol_grid * evaluation.adjoint_end_warps[i]
                    + evaluation.volume_grids[i]
                    * np.einsum("a...,a...->...", adj_grad_warps[i], dpsi_grid)
                    + evaluation.volume_grids[i]
                    * self._warp_grid(dlam_end, evaluation.inverse_disp_grids[i])
                )
                term = dlam[None] * evaluation.warped_grads[i]
                term = term + evaluation.adjoint_nodes[i][None] * self._grid_grad(dm)
                data_nodes.append(spectral.project(dom, term))

        return self._assemble(direction, data_nodes)
