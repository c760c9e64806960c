"""Run configuration files: flat INI sections mapped onto the config types.

Sections ``[domain]``, ``[problem]``, ``[optimizer]`` and ``[run]`` mirror
the constructor arguments of :class:`Domain`, :class:`ProblemConfig` and
:class:`SolverConfig` plus the input/output paths of a registration run.
Unknown keys are rejected so typos fail loudly, and the effective
configuration (defaults included) is echoed into every report.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .domain import Domain
from .objectives import ProblemConfig
from .solver import SolverConfig


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    domain: Domain | None
    problem: ProblemConfig
    solver: SolverConfig
    objective: str = "state"
    mode: str = "stationary"
    bandwidth: tuple[int, ...] | None = None
    alpha: float = 0.02
    order: int = 2
    symbol: str = "discrete"
    source: str = ""
    target: str = ""
    source_labels: str = ""
    target_labels: str = ""
    output_dir: str = "out"
    seed: int = 0

    def domain_for(self, shape: tuple[int, ...]) -> Domain:
        if self.domain is not None:
            if self.domain.shape != shape:
                raise ConfigError(
                    f"configured grid {self.domain.shape} does not match volume {shape}"
                )
            return self.domain
        if self.bandwidth is None:
            raise ConfigError("bandwidth must be set in [domain]")
        bw = self.bandwidth
        if len(bw) == 1:
            bw = bw * len(shape)
        return Domain(shape=shape, bandwidth=bw, alpha=self.alpha,
                      order=self.order, symbol=self.symbol)


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False, "on": True, "off": False}


def _get(section, key, cast, default):
    if key not in section:
        return default
    raw = section[key].strip()
    try:
        if cast is bool:
            return _BOOL[raw.lower()]
        return cast(raw)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid value {raw!r} for {key}") from exc


def _int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(t) for t in raw.split())


def _check_keys(parser, section, allowed):
    if section not in parser:
        return
    unknown = set(parser[section]) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    _check_keys(parser, "domain", {"shape", "bandwidth", "alpha", "order", "symbol"})
    _check_keys(parser, "problem", {
        "objective", "sigma2", "gamma", "mode", "n_time_steps", "interp",
        "image_grad", "quadrature", "cfl_limit", "auto_refine", "contraction"})
    _check_keys(parser, "optimizer", {
        "method", "max_outer", "grad_tol", "pcg_tol", "pcg_max_iter",
        "ls_shrink", "ls_c1", "step0", "max_halvings", "eisenstat_walker"})
    _check_keys(parser, "run", {
        "source", "target", "source_labels", "target_labels", "output_dir", "seed"})

    dom_sec = parser["domain"] if "domain" in parser else {}
    prob_sec = parser["problem"] if "problem" in parser else {}
    opt_sec = parser["optimizer"] if "optimizer" in parser else {}
    run_sec = parser["run"] if "run" in parser else {}

    alpha = _get(dom_sec, "alpha", float, 0.02)
    order = _get(dom_sec, "order", int, 2)
    symbol = _get(dom_sec, "symbol", str, "discrete")
    bandwidth = _get(dom_sec, "bandwidth", _int_tuple, None)
    shape = _get(dom_sec, "shape", _int_tuple, None)

    try:
        domain = None
        if shape is not None:
            if bandwidth is None:
                raise ConfigError("[domain] shape given without bandwidth")
            bw = bandwidth * len(shape) if len(bandwidth) == 1 else bandwidth
            domain = Domain(shape=shape, bandwidth=bw, alpha=alpha, order=order,
                            symbol=symbol)
        problem = ProblemConfig(
            sigma2=_get(prob_sec, "sigma2", float, 1.0),
            gamma=_get(prob_sec, "gamma", int, 0),
            n_time_steps=_get(prob_sec, "n_time_steps", int, 10),
            interp=_get(prob_sec, "interp", str, "linear"),
            image_grad=_get(prob_sec, "image_grad", str, "central"),
            quadrature=_get(prob_sec, "quadrature", str, "trapezoid"),
            cfl_limit=_get(prob_sec, "cfl_limit", float, 0.5),
            auto_refine=_get(prob_sec, "auto_refine", bool, True),
            contraction=_get(prob_sec, "contraction", str, "transposed"),
        )
        solver = SolverConfig(
            method=_get(opt_sec, "method", str, "gauss_newton"),
            max_outer=_get(opt_sec, "max_outer", int, 50),
            grad_tol=_get(opt_sec, "grad_tol", float, 0.01),
            pcg_tol=_get(opt_sec, "pcg_tol", float, 0.1),
            pcg_max_iter=_get(opt_sec, "pcg_max_iter", int, 10),
            ls_shrink=_get(opt_sec, "ls_shrink", float, 0.5),
            ls_c1=_get(opt_sec, "ls_c1", float, 1e-4),
            step0=_get(opt_sec, "step0", float, 1.0),
            max_halvings=_get(opt_sec, "max_halvings", int, 20),
            eisenstat_walker=_get(opt_sec, "eisenstat_walker", bool, False),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    objective = _get(prob_sec, "objective", str, "state")
    if objective not in ("state", "deformation"):
        raise ConfigError(f"unknown objective {objective!r}")
    mode = _get(prob_sec, "mode", str, "stationary")
    if mode not in ("stationary", "nonstationary"):
        raise ConfigError(f"unknown mode {mode!r}")

    return RunConfig(
        domain=domain, problem=problem, solver=solver, objective=objective,
        mode=mode, bandwidth=bandwidth, alpha=alpha, order=order, symbol=symbol,
        source=_get(run_sec, "source", str, ""),
        target=_get(run_sec, "target", str, ""),
        source_labels=_get(run_sec, "source_labels", str, ""),
        target_labels=_get(run_sec, "target_labels", str, ""),
        output_dir=_get(run_sec, "output_dir", str, "out"),
        seed=_get(run_sec, "seed", int, 0),
    )


def effective_settings(cfg: RunConfig, domain: Domain) -> dict:
    """Flat mapping of every effective setting, defaults included."""
    out = {
        "domain.shape": " ".join(str(n) for n in domain.shape),
        "domain.bandwidth": " ".join(str(k) for k in domain.bandwidth),
        "domain.alpha": domain.alpha,
        "domain.order": domain.order,
        "domain.symbol": domain.symbol,
        "problem.objective": cfg.objective,
        "problem.mode": cfg.mode,
    }
    for key in ("sigma2", "gamma", "n_time_steps", "interp", "image_grad",
                "quadrature", "cfl_limit", "auto_refine", "contraction"):
        out[f"problem.{key}"] = getattr(cfg.problem, key)
    for key in ("method", "max_outer", "grad_tol", "pcg_tol", "pcg_max_iter",
                "ls_shrink", "ls_c1", "step0", "max_halvings", "eisenstat_walker"):
        out[f"optimizer.{key}"] = getattr(cfg.solver, key)
    out["run.seed"] = cfg.seed
    return out
