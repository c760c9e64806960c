"""Reduced-space inexact Newton-Krylov optimization loop.

The search direction solves ``H(step) = g`` by preconditioned conjugate
gradient with the inverse metric operator as preconditioner (applied per
time node), and the update is ``v <- v - eps * step`` with a backtracking
Armijo line search on the energy.  ``gradient_descent`` replaces the
Krylov solve by the preconditioned gradient itself.  With the
incompressibility constraint active every operator application is followed
by a Leray projection, so the whole Krylov space stays divergence-free.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from . import spectral, transport
from .transport import TimeFlow, flow_inner

_METHODS = ("newton", "gauss_newton", "gradient_descent")


@dataclass(frozen=True)
class SolverConfig:
    method: str = "gauss_newton"
    max_outer: int = 50
    grad_tol: float = 0.01
    pcg_tol: float = 0.1
    pcg_max_iter: int = 10
    ls_shrink: float = 0.5
    ls_c1: float = 1e-4
    step0: float = 1.0
    max_halvings: int = 20
    eisenstat_walker: bool = False

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if min(self.max_outer, self.pcg_max_iter, self.max_halvings) < 1:
            raise ValueError("iteration budgets must be >= 1")
        if min(self.grad_tol, self.pcg_tol, self.ls_c1, self.step0) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.ls_shrink < 1.0:
            raise ValueError("ls_shrink must lie in (0, 1)")


@dataclass
class IterationRecord:
    outer: int
    energy: float
    mse_rel: float
    grad_rel: float
    pcg_iters: int
    step: float
    negative_curvature: bool
    wall_time: float


@dataclass
class SolveResult:
    velocity: TimeFlow
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "running"
    final_grad_rel: float = np.nan
    final_mse_rel: float = np.nan
    negative_curvature_events: int = 0
    total_pcg_iters: int = 0
    evaluation: object | None = None


def relative_gradient_norm(gradient: TimeFlow, initial: TimeFlow | None,
                           initial_norm: float | None = None) -> float:
    """Max-norm ratio of spatial gradient realizations against the start.

    A zero initial gradient means the problem starts converged; the ratio
    is defined as 0 in that case.
    """
    if initial_norm is None:
        initial_norm = transport.flow_max_abs(initial)
    if initial_norm == 0.0:
        return 0.0
    return transport.flow_max_abs(gradient) / initial_norm


def pcg_solve(apply_h, g: TimeFlow, cfg: SolverConfig, apply_precond, quadrature: str):
    """Preconditioned conjugate gradient on ``H(x) = g`` in flow space.

    Returns ``(x, iterations, negative_curvature)``.  On detecting
    non-positive curvature the current iterate is returned (the
    preconditioned gradient if it happens on the first iteration).
    """

    def inner(a, b):
        return flow_inner(a, b, quadrature)

    gnorm0 = np.sqrt(inner(g, g))
    if gnorm0 == 0.0:
        return g * 0.0, 0, False
    x = g * 0.0
    r = g.copy()
    z = apply_precond(r)
    p = z.copy()
    rz = inner(r, z)
    res0 = np.sqrt(max(rz, 0.0))
    for it in range(cfg.pcg_max_iter):
        hp = apply_h(p)
        php = inner(p, hp)
        if not np.isfinite(php):
            raise FloatingPointError("PCG encountered a non-finite curvature value")
        if php <= 0.0:
            return (z if it == 0 else x), it, True
        alpha = rz / php
        x = x + alpha * p
        r = r - alpha * hp
        z = apply_precond(r)
        rz_next = inner(r, z)
        if not np.isfinite(rz_next):
            raise FloatingPointError("PCG encountered a non-finite residual")
        if np.sqrt(max(rz_next, 0.0)) <= cfg.pcg_tol * res0:
            return x, it + 1, False
        p = z + (rz_next / rz) * p
        rz = rz_next
    return x, cfg.pcg_max_iter, False


def minimize(objective, v0: TimeFlow, cfg: SolverConfig | None = None,
             mse_reference: float | None = None) -> SolveResult:
    """Outer optimization loop; energy is monotone over accepted steps.

    ``mse_reference`` is the squared-norm of the initial image mismatch
    used for relative-error reporting; it defaults to the source/target
    mismatch of the objective.
    """
    cfg = cfg or SolverConfig()
    dom = objective.domain
    quadrature = objective.config.quadrature
    incompressible = objective.config.gamma == 1

    def project_free(flow):
        if not incompressible:
            return flow
        return flow.map_nodes(lambda c: spectral.make_divergence_free(dom, c))

    def precondition(flow):
        out = flow.map_nodes(lambda c: spectral.apply_inverse_helmholtz(dom, c))
        return project_free(out)

    if mse_reference is None:
        diff = objective.source - objective.target
        mse_reference = spectral.grid_norm2(dom, diff)

    v = project_free(v0.copy())
    result = SolveResult(velocity=v)
    start = time.perf_counter()
    grad_norm0 = None
    best_v, best_energy = v, np.inf
    pcg_tol = cfg.pcg_tol
    prev_grad_norm = None

    for outer in range(cfg.max_outer):
        evaluation = objective.gradient(v)
        g = evaluation.gradient
        if grad_norm0 is None:
            grad_norm0 = transport.flow_max_abs(g)
        grad_rel = relative_gradient_norm(g, None, initial_norm=grad_norm0)
        mse_rel = (100.0 * spectral.grid_norm2(dom, evaluation.warped_source - objective.target)
                   / mse_reference) if mse_reference > 0 else 0.0
        if evaluation.energy < best_energy:
            best_v, best_energy = v, evaluation.energy

        if grad_rel <= cfg.grad_tol:
            result.records.append(IterationRecord(
                outer, evaluation.energy, mse_rel, grad_rel, 0, 0.0, False,
                time.perf_counter() - start))
            result.status = "converged"
            result.velocity = v
            result.evaluation = evaluation
            break

        if cfg.method == "gradient_descent":
            step_dir, pcg_iters, neg_curv = precondition(g), 0, False
        else:
            gauss_newton = cfg.method == "gauss_newton"
            if cfg.eisenstat_walker and prev_grad_norm is not None:
                ratio = transport.flow_max_abs(g) / prev_grad_norm
                pcg_tol = float(min(cfg.pcg_tol, max(1e-4, ratio * ratio)))
            local_cfg = cfg if pcg_tol == cfg.pcg_tol else \
                dataclasses.replace(cfg, pcg_tol=pcg_tol)

            def apply_h(flow):
                out = evaluation.hessian_vector(flow, gauss_newton=gauss_newton)
                return project_free(out)

            step_dir, pcg_iters, neg_curv = pcg_solve(
                apply_h, g, local_cfg, precondition, quadrature)
            if neg_curv:
                result.negative_curvature_events += 1
        result.total_pcg_iters += pcg_iters

        slope = flow_inner(g, step_dir, quadrature)
        if slope <= 0.0:
            # not a descent direction for the decrement; fall back to the
            # preconditioned gradient
            step_dir = precondition(g)
            slope = flow_inner(g, step_dir, quadrature)

        eps = cfg.step0
        accepted = False
        for _ in range(cfg.max_halvings):
            trial = project_free(v - eps * step_dir)
            trial_energy = objective.energy(trial)
            if trial_energy <= evaluation.energy - cfg.ls_c1 * eps * slope:
                accepted = True
                break
            eps *= cfg.ls_shrink
        prev_grad_norm = transport.flow_max_abs(g)

        result.records.append(IterationRecord(
            outer, evaluation.energy, mse_rel, grad_rel, pcg_iters,
            eps if accepted else 0.0, neg_curv, time.perf_counter() - start))

        if not accepted:
            result.status = "stalled"
            result.velocity = best_v
            break
        v = trial
        result.velocity = v
    else:
        result.status = "budget_exhausted"
        result.velocity = v

    if result.evaluation is None:
        result.evaluation = objective.gradient(result.velocity)
    final = result.evaluation
    result.final_grad_rel = relative_gradient_norm(final.gradient, None,
                                                   initial_norm=grad_norm0 or 1.0)
    result.final_mse_rel = (100.0 * spectral.grid_norm2(
        dom, final.warped_source - objective.target) / mse_reference
        if mse_reference > 0 else 0.0)
    return result
