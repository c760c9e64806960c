"""Development probe: calibrate acceptance-run configurations."""

import sys
import time

import numpy as np

from blreg import gridops, spectral
from blreg.domain import Domain
from blreg.metrics import mse_rel
from blreg.objectives import DeformationObjective, ProblemConfig, StateObjective
from blreg.solver import SolverConfig, minimize
from blreg.synthesis import synthesize_pair
from blreg.transport import TimeFlow


def run(kind, objective_cls, method, K=16, N=64, sigma2=0.1, alpha=0.01, order=2,
        gamma=0, max_outer=30, shift=0.12, angle=0.8, grad_tol=0.01, seed=0):
    dom = Domain(shape=(N, N), bandwidth=(K, K), alpha=alpha, order=order)
    src, tgt, labels = synthesize_pair(kind, N, seed=seed, shift=shift, angle=angle)
    obj = objective_cls(dom, src, tgt, ProblemConfig(sigma2=sigma2, gamma=gamma))
    cfg = SolverConfig(method=method, max_outer=max_outer, grad_tol=grad_tol)
    t0 = time.time()
    res = minimize(obj, TimeFlow.zero(dom), cfg)
    dt = time.time() - t0
    phi_end = spectral.include(dom, res.evaluation.cache.forward[-1], check=False)
    det = gridops.jacobian_determinant(dom, phi_end)
    n_acc = sum(1 for r in res.records if r.step > 0)
    print(f"{kind:12s} {objective_cls.__name__[:5]:5s} {method:16s} K={K:2d} g={gamma} "
          f"s2={sigma2:<6g} a={alpha:<7g} -> mse={res.final_mse_rel:6.2f} "
          f"gr={res.final_grad_rel:.3f} it={n_acc:3d} pcg={res.total_pcg_iters:3d} "
          f"negcurv={res.negative_curvature_events} J=[{det.min():.3f},{det.max():.3f}] "
          f"{res.status:16s} {dt:5.1f}s")
    return res


if __name__ == "__main__":
    what = sys.argv[1] if len(sys.argv) > 1 else "all"
    if what in ("all", "translation"):
        for s2 in (0.3, 0.1):
            run("translation", StateObjective, "gauss_newton", sigma2=s2)
    if what in ("all", "circle"):
        for s2 in (0.3, 0.1):
            run("c_to_circle", StateObjective, "gauss_newton", sigma2=s2)
            run("c_to_circle", DeformationObjective, "gauss_newton", sigma2=s2)
        run("c_to_circle", StateObjective, "gradient_descent", sigma2=0.1, max_outer=100)
    if what in ("all", "swirl"):
        for s2 in (0.3, 0.1):
            run("swirl", StateObjective, "gauss_newton", sigma2=s2, gamma=1, angle=0.6)
            run("swirl", DeformationObjective, "gauss_newton", sigma2=s2, gamma=1, angle=0.6)
    if what == "ladder":
        for K in (4, 8, 16):
            run("c_to_circle", DeformationObjective, "gauss_newton", K=K, sigma2=0.1)
