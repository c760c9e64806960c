"""Time integration of the band-limited transport equations.

All trajectories are integrated with classical RK4 on the node grid
``t_i = i / n_steps`` of the unit time interval, optionally with several
substeps per node interval when the CFL bound requires it.  Maps are stored
as band-limited displacements (the identity itself is not band-limited):
for a map ``phi = id + u`` the advection equation becomes

    du/dt = -(v + Du * v)

where ``*`` is the truncated convolution and the identity contributes the
plain ``v`` term.  Incremental (tangent) trajectories are integrated
jointly with their base trajectory so the internal RK4 stages match; the
tangent of the discrete flow then equals the discrete flow of the tangent
equation, which keeps derivative checks tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .domain import Domain


class CFLViolation(RuntimeError):
    """Raised when the transport CFL bound fails and refinement is disabled."""


# ---------------------------------------------------------------------------
# velocity flows
# ---------------------------------------------------------------------------

@dataclass
class TimeFlow:
    """Velocity field flow on the nodes of [0, 1].

    ``values`` has shape ``(n_stored, d, *block)`` where ``n_stored`` is 1
    for a stationary flow (the single field is presented at every node) and
    ``n_steps + 1`` otherwise.
    """

    domain: Domain
    values: np.ndarray
    n_steps: int
    stationary: bool

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        expected = 1 if self.stationary else self.n_steps + 1
        block = (self.domain.ndim,) + self.domain.block_shape
        if self.values.shape != (expected,) + block:
            raise ValueError(
                f"flow values have shape {self.values.shape}, expected {(expected,) + block}"
            )

    @classmethod
    def zero(cls, domain: Domain, n_steps: int = 10, stationary: bool = True) -> "TimeFlow":
        n = 1 if stationary else n_steps + 1
        values = np.zeros((n, domain.ndim) + domain.block_shape, dtype=np.complex128)
        return cls(domain, values, n_steps, stationary)

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    @property
    def n_stored(self) -> int:
        return self.values.shape[0]

    def node(self, i: int) -> np.ndarray:
        return self.values[0] if self.stationary else self.values[i]

    def sample(self, t: float) -> np.ndarray:
        """Velocity at an arbitrary time, linear in t between nodes."""
        if self.stationary:
            return self.values[0]
        s = min(max(t, 0.0), 1.0) * self.n_steps
        i = min(int(np.floor(s)), self.n_steps - 1)
        w = s - i
        if w == 0.0:
            return self.values[i]
        return (1.0 - w) * self.values[i] + w * self.values[i + 1]

    def copy(self) -> "TimeFlow":
        return TimeFlow(self.domain, self.values.copy(), self.n_steps, self.stationary)

    def _like(self, values: np.ndarray) -> "TimeFlow":
        return TimeFlow(self.domain, values, self.n_steps, self.stationary)

    def _check_compatible(self, other: "TimeFlow"):
        if (self.domain != other.domain or self.n_steps != other.n_steps
                or self.stationary != other.stationary):
            raise ValueError("incompatible flows")

    def __add__(self, other: "TimeFlow") -> "TimeFlow":
        self._check_compatible(other)
        return self._like(self.values + other.values)

    def __sub__(self, other: "TimeFlow") -> "TimeFlow":
        self._check_compatible(other)
        return self._like(self.values - other.values)

    def __mul__(self, scalar: float) -> "TimeFlow":
        return self._like(self.values * scalar)

    __rmul__ = __mul__

    def map_nodes(self, fn) -> "TimeFlow":
        """Apply a per-node spectral operation to every stored node."""
        out = np.empty_like(self.values)
        for i in range(self.n_stored):
            out[i] = fn(self.values[i])
        return self._like(out)

    def max_speed(self) -> float:
        return max(spectral.max_abs(self.domain, self.values[i]) for i in range(self.n_stored))

    def max_divergence(self) -> float:
        return max(
            float(np.max(np.abs(spectral.spectral_divergence(self.domain, self.values[i]))))
            for i in range(self.n_stored)
        )


def time_weights(n_steps: int, rule: str = "trapezoid") -> np.ndarray:
    """Quadrature weights on the n_steps + 1 nodes of [0, 1]."""
    dt = 1.0 / n_steps
    if rule == "trapezoid":
        w = np.full(n_steps + 1, dt)
        w[0] = w[-1] = dt / 2.0
        return w
    if rule == "simpson":
        if n_steps % 2 != 0:
            raise ValueError("simpson weights need an even number of steps")
        w = np.empty(n_steps + 1)
        w[0::2] = 2.0
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return w * (dt / 3.0)
    raise ValueError(f"unknown quadrature rule {rule!r}")


def flow_inner(a: TimeFlow, b: TimeFlow, rule: str = "trapezoid") -> float:
    """Time-quadrature weighted inner product of two flows."""
    a._check_compatible(b)
    if a.stationary:
        return spectral.inner(a.values[0], b.values[0])
    w = time_weights(a.n_steps, rule)
    return float(sum(w[i] * spectral.inner(a.values[i], b.values[i]) for i in range(a.n_nodes)))


def flow_max_abs(flow: TimeFlow) -> float:
    """Max-norm over all nodes of the spatial realizations."""
    return flow.max_speed()


# ---------------------------------------------------------------------------
# CFL monitoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CFLReport:
    number: float
    limit: float
    passed: bool
    suggested_steps: int


def check_cfl(flow: TimeFlow, n_steps: int | None = None, limit: float = 0.5) -> CFLReport:
    """Courant number of the flow and the minimal step count restoring it.

    The number is ``max_t ||v_t||_inf * dt / min_j h_j``.
    """
    if n_steps is None:
        n_steps = flow.n_steps
    h_min = min(flow.domain.spacing)
    speed = flow.max_speed()
    number = speed / (n_steps * h_min)
    if speed == 0.0:
        return CFLReport(0.0, limit, True, n_steps)
    suggested = max(1, int(np.ceil(speed / (limit * h_min))))
    return CFLReport(number, limit, number <= limit, max(suggested, 1))


def resolve_substeps(flow: TimeFlow, limit: float, auto_refine: bool) -> int:
    """Substeps per node interval keeping the CFL number within the limit."""
    report = check_cfl(flow, limit=limit)
    if report.passed:
        return 1
    if not auto_refine:
        raise CFLViolation(
            f"CFL number {report.number:.3g} exceeds {limit}; "
            f"needs at least {report.suggested_steps} time steps"
        )
    return int(np.ceil(report.suggested_steps / flow.n_steps))


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def _map_rhs(dom: Domain, disp, vt):
    d = dom.ndim
    jac = spectral.spectral_jacobian(dom, disp)
    stack = np.concatenate([jac.reshape((d * d,) + dom.block_shape), vt])
    g = spectral._to_pad_grid(dom, stack)
    jg = g[: d * d].reshape((d, d) + g.shape[1:])
    prod = np.einsum("ij...,j...->i...", jg, g[d * d:])
    return -(vt + spectral._from_pad_grid(dom, prod))


def _map_tangent_rhs(dom: Domain, disp, tangent, vt, dvt):
    d = dom.ndim
    jac = spectral.spectral_jacobian(dom, disp).reshape((d * d,) + dom.block_shape)
    djac = spectral.spectral_jacobian(dom, tangent).reshape((d * d,) + dom.block_shape)
    stack = np.concatenate([jac, djac, vt, dvt])
    g = spectral._to_pad_grid(dom, stack)
    pad = g.shape[1:]
    jg = g[: d * d].reshape((d, d) + pad)
    djg = g[d * d: 2 * d * d].reshape((d, d) + pad)
    vg = g[2 * d * d: 2 * d * d + d]
    dvg = g[2 * d * d + d:]
    prod = np.einsum("ij...,j...->i...", djg, vg) + np.einsum("ij...,j...->i...", jg, dvg)
    return -(dvt + spectral._from_pad_grid(dom, prod))


def _volume_rhs(dom: Domain, vol, vt):
    # dJ/dt = -v.grad(J) - J div(v); with this sign J equals det(D psi) and
    # J * (endpoint adjoint warped by psi) solves the conservative adjoint
    # transport (Jacobi's formula fixes the sign of the divergence term)
    d = dom.ndim
    grad = spectral.spectral_gradient(dom, vol)
    div = spectral.spectral_divergence(dom, vt)
    stack = np.concatenate([vt, grad, vol[None], div[None]])
    g = spectral._to_pad_grid(dom, stack)
    rhs = -np.einsum("a...,a...->...", g[:d], g[d:2 * d]) - g[2 * d] * g[2 * d + 1]
    return spectral._from_pad_grid(dom, rhs)


def _volume_tangent_rhs(dom: Domain, vol, dvol, vt, dvt):
    d = dom.ndim
    grad = spectral.spectral_gradient(dom, vol)
    dgrad = spectral.spectral_gradient(dom, dvol)
    div = spectral.spectral_divergence(dom, vt)
    ddiv = spectral.spectral_divergence(dom, dvt)
    stack = np.concatenate([vt, dvt, grad, dgrad, vol[None], dvol[None], div[None], ddiv[None]])
    g = spectral._to_pad_grid(dom, stack)
    v_g, dv_g = g[:d], g[d:2 * d]
    grad_g, dgrad_g = g[2 * d:3 * d], g[3 * d:4 * d]
    vol_g, dvol_g, div_g, ddiv_g = g[4 * d], g[4 * d + 1], g[4 * d + 2], g[4 * d + 3]
    rhs = (
        -np.einsum("a...,a...->...", dv_g, grad_g)
        - np.einsum("a...,a...->...", v_g, dgrad_g)
        - dvol_g * div_g
        - vol_g * ddiv_g
    )
    return spectral._from_pad_grid(dom, rhs)


def _flux_divergence(dom: Domain, flux_pad: np.ndarray) -> np.ndarray:
    """Row divergence of a (d, d, *pad) flux evaluated on the padded grid."""
    d = dom.ndim
    flux = spectral._from_pad_grid(dom, flux_pad.reshape((d * d,) + flux_pad.shape[2:]))
    flux = flux.reshape((d, d) + dom.block_shape)
    kvecs = spectral._angular_frequencies(dom)
    out = dom.zero_vector()
    for i in range(d):
        for j in range(d):
            out[i] += 1j * kvecs[j] * flux[i, j]
    return out


def _momentum_rhs(dom: Domain, rho, vt):
    g = spectral._to_pad_grid(dom, np.concatenate([rho, vt]))
    d = dom.ndim
    flux = np.einsum("i...,j...->ij...", g[:d], g[d:])
    return -_flux_divergence(dom, flux)


def _momentum_pair_rhs(dom: Domain, rho, drho, vt, dvt):
    """Base and tangent momentum derivatives, with the tangent source."""
    d = dom.ndim
    parts = [rho, drho, vt] + ([dvt] if dvt is not None else [])
    g = spectral._to_pad_grid(dom, np.concatenate(parts))
    rho_g, drho_g, v_g = g[:d], g[d:2 * d], g[2 * d:3 * d]
    base_flux = np.einsum("i...,j...->ij...", rho_g, v_g)
    tan_flux = np.einsum("i...,j...->ij...", drho_g, v_g)
    if dvt is not None:
        tan_flux = tan_flux + np.einsum("i...,j...->ij...", rho_g, g[3 * d:])
    stacked = np.stack([base_flux, tan_flux])
    flux = spectral._from_pad_grid(
        dom, stacked.reshape((2 * d * d,) + stacked.shape[3:])
    ).reshape((2, d, d) + dom.block_shape)
    kvecs = spectral._angular_frequencies(dom)
    out = np.zeros((2, d) + dom.block_shape, dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            out[:, i] += 1j * kvecs[j] * flux[:, i, j]
    return -out[0], -out[1]


# ---------------------------------------------------------------------------
# RK4 driver
# ---------------------------------------------------------------------------

def _rk4(flow: TimeFlow, state0: tuple, rhs, forward: bool, substeps: int) -> list:
    """Advance a tuple-valued state through all node intervals.

    ``rhs(t, state, vt)`` returns the time derivative of each state entry;
    node values are recorded in ascending time order regardless of the
    integration direction.
    """
    n = flow.n_steps
    dt = (1.0 if forward else -1.0) / n
    h = dt / substeps
    times = range(n) if forward else range(n, 0, -1)
    state = tuple(np.copy(s) for s in state0)
    records = [tuple(np.copy(s) for s in state)]
    for node in times:
        t0 = node / n
        for k in range(substeps):
            t = t0 + k * h
            vt1 = flow.sample(t)
            vt2 = flow.sample(t + 0.5 * h)
            vt4 = flow.sample(t + h)
            k1 = rhs(t, state, vt1)
            s2 = tuple(s + 0.5 * h * ki for s, ki in zip(state, k1))
            k2 = rhs(t + 0.5 * h, s2, vt2)
            s3 = tuple(s + 0.5 * h * ki for s, ki in zip(state, k2))
            k3 = rhs(t + 0.5 * h, s3, vt2)
            s4 = tuple(s + h * ki for s, ki in zip(state, k3))
            k4 = rhs(t + h, s4, vt4)
            state = tuple(
                s + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
                for s, a, b, c, d in zip(state, k1, k2, k3, k4)
            )
        records.append(tuple(np.copy(s) for s in state))
    if not forward:
        records.reverse()
    return [np.stack([rec[j] for rec in records]) for j in range(len(state0))]


# ---------------------------------------------------------------------------
# public integrators
# ---------------------------------------------------------------------------

def integrate_forward_map(v: TimeFlow, substeps: int = 1) -> np.ndarray:
    """Displacement nodes of the map pulling the source through the flow.

    Solves ``d(phi)/dt + D(phi) * v = 0`` from ``phi(0) = id``; the returned
    array holds the displacement ``phi - id`` at every node.
    """
    dom = v.domain
    u0 = dom.zero_vector()

    def rhs(t, state, vt):
        return (_map_rhs(dom, state[0], vt),)

    return _rk4(v, (u0,), rhs, forward=True, substeps=substeps)[0]


def integrate_inverse_map_and_volume(v: TimeFlow, substeps: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Displacement and volume-change nodes of the end-anchored map.

    Integrates backward from ``psi(1) = id`` and ``vol(1) = 1`` the pair

        -d(psi)/dt - D(psi) * v = 0
        -d(vol)/dt - v . grad(vol) = -vol div(v)
    """
    dom = v.domain
    w0 = dom.zero_vector()
    vol0 = dom.zero_scalar()
    vol0[(0,) * dom.ndim] = 1.0

    def rhs(t, state, vt):
        return (_map_rhs(dom, state[0], vt), _volume_rhs(dom, state[1], vt))

    res = _rk4(v, (w0, vol0), rhs, forward=False, substeps=substeps)
    return res[0], res[1]


def integrate_state_tangents(v: TimeFlow, dv: TimeFlow, substeps: int = 1,
                             with_volume: bool = True, with_inverse: bool = True):
    """Tangent trajectories of the forward map, inverse map and volume.

    Base trajectories are re-integrated alongside so the RK4 stages agree;
    returns ``(dphi, dpsi, dvol)`` node arrays with entries ``None`` when
    not requested.  Endpoint conditions are zero for all tangents.
    """
    v._check_compatible(dv)
    dom = v.domain

    def fwd_rhs(t, state, vt):
        dvt = dv.sample(t)
        u, du = state
        return (_map_rhs(dom, u, vt), _map_tangent_rhs(dom, u, du, vt, dvt))

    dphi = _rk4(v, (dom.zero_vector(), dom.zero_vector()), fwd_rhs, True, substeps)[1]
    if not with_inverse:
        return dphi, None, None

    one = dom.zero_scalar()
    one[(0,) * dom.ndim] = 1.0
    if with_volume:
        def bwd_rhs(t, state, vt):
            dvt = dv.sample(t)
            w, dw, vol, dvol = state
            return (
                _map_rhs(dom, w, vt),
                _map_tangent_rhs(dom, w, dw, vt, dvt),
                _volume_rhs(dom, vol, vt),
                _volume_tangent_rhs(dom, vol, dvol, vt, dvt),
            )

        res = _rk4(
            v,
            (dom.zero_vector(), dom.zero_vector(), one, dom.zero_scalar()),
            bwd_rhs, False, substeps,
        )
        return dphi, res[1], res[3]

    def bwd_rhs(t, state, vt):
        dvt = dv.sample(t)
        w, dw = state
        return (_map_rhs(dom, w, vt), _map_tangent_rhs(dom, w, dw, vt, dvt))

    res = _rk4(v, (dom.zero_vector(), dom.zero_vector()), bwd_rhs, False, substeps)
    return dphi, res[1], None


def integrate_momentum(v: TimeFlow, momentum_end: np.ndarray, substeps: int = 1) -> np.ndarray:
    """Backward conservative transport of a vector momentum from t = 1.

    Solves ``-d(rho)/dt - div(rho x v) = 0`` componentwise.
    """
    dom = v.domain

    def rhs(t, state, vt):
        return (_momentum_rhs(dom, state[0], vt),)

    return _rk4(v, (momentum_end.copy(),), rhs, forward=False, substeps=substeps)[0]


def integrate_momentum_tangent(v: TimeFlow, dv: TimeFlow, momentum_end: np.ndarray,
                               tangent_end: np.ndarray, substeps: int = 1,
                               gauss_newton: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Momentum and its tangent, integrated backward together.

    The tangent equation carries the source ``-div(rho x dv)``; in
    Gauss-Newton mode that source is removed and the tangent transport
    becomes homogeneous in the tangent endpoint.
    """
    v._check_compatible(dv)
    dom = v.domain

    def rhs(t, state, vt):
        dvt = None if gauss_newton else dv.sample(t)
        return _momentum_pair_rhs(dom, state[0], state[1], vt, dvt)

    res = _rk4(v, (momentum_end.copy(), tangent_end.copy()), rhs, False, substeps)
    return res[0], res[1]


# ---------------------------------------------------------------------------
# trajectory cache
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryCache:
    """Node trajectories retained for gradient and Hessian-vector reuse.

    Immutable after construction; safe to share across concurrent
    Hessian-vector evaluations.
    """

    velocity: TimeFlow
    substeps: int
    forward: np.ndarray
    inverse: np.ndarray | None = None
    volume: np.ndarray | None = None
    momentum: np.ndarray | None = None
    momentum_end: np.ndarray | None = None

    def assert_matches(self, v: TimeFlow):
        if v is self.velocity:
            return
        if (v.domain != self.velocity.domain or v.n_steps != self.velocity.n_steps
                or v.stationary != self.velocity.stationary
                or not np.array_equal(v.values, self.velocity.values)):
            raise ValueError("trajectory cache does not match this velocity flow")
