"""Development probe: full derivative-check matrix plus Hessian properties."""

import sys
import numpy as np

sys.path.insert(0, "tests")
from helpers import make_domain, smooth_vector_block

from blreg import spectral
from blreg.transport import TimeFlow, flow_inner
from blreg.objectives import DeformationObjective, ProblemConfig, StateObjective


def band_image(dom, rng, decay=3.0, amp=1.0):
    c = smooth_vector_block(dom, rng, 1.0, decay=decay)[0]
    img = spectral.include(dom, c)
    img = img - img.min()
    return amp * img / img.max()


def make_flow(dom, rng, amp, nt, stationary, gamma, decay=3.0):
    if stationary:
        vals = smooth_vector_block(dom, rng, amp, decay=decay)[None]
    else:
        vals = np.stack([smooth_vector_block(dom, rng, amp, decay=decay) for _ in range(nt + 1)])
    f = TimeFlow(dom, vals, nt, stationary)
    if gamma:
        f = f.map_nodes(lambda c: spectral.make_divergence_free(dom, c))
    return f


def setup(objective_cls, gamma, nt, contraction="transposed", quad="simpson", seed=0):
    dom = make_domain((32, 32), (8, 8), alpha=0.05, order=2)
    rng = np.random.default_rng(seed)
    I0 = band_image(dom, rng)
    I1 = band_image(dom, rng)
    cfg = ProblemConfig(sigma2=1.0, gamma=gamma, n_time_steps=nt, interp="fourier",
                        image_grad="spectral", quadrature=quad, contraction=contraction)
    return dom, rng, objective_cls(dom, I0, I1, cfg), cfg


def grad_check(objective_cls, gamma, stationary, nt, seed=0, eps=1e-4, ndirs=3):
    dom, rng, obj, cfg = setup(objective_cls, gamma, nt, seed=seed)
    v = make_flow(dom, rng, 0.04, nt, stationary, gamma)
    ev = obj.gradient(v)
    worst = 0.0
    for _ in range(ndirs):
        w = make_flow(dom, rng, 0.04, nt, stationary, gamma)
        pred = flow_inner(ev.gradient, w, cfg.quadrature)
        fd = (obj.energy(v + eps * w) - obj.energy(v - eps * w)) / (2 * eps)
        worst = max(worst, abs(pred - fd) / abs(fd))
    return worst


def eps_sweep(objective_cls, gamma, stationary, nt, seed=0):
    dom, rng, obj, cfg = setup(objective_cls, gamma, nt, seed=seed)
    v = make_flow(dom, rng, 0.04, nt, stationary, gamma)
    w = make_flow(dom, rng, 0.04, nt, stationary, gamma)
    ev = obj.gradient(v)
    pred = flow_inner(ev.gradient, w, cfg.quadrature)
    errs = []
    for eps in (3e-2, 1e-2, 3e-3, 1e-3):
        fd = (obj.energy(v + eps * w) - obj.energy(v - eps * w)) / (2 * eps)
        errs.append(abs(pred - fd) / abs(fd))
    slopes = [np.log(errs[i] / errs[i + 1]) / np.log(3.0 if i % 2 == 0 else 10 / 3)
              for i in range(len(errs) - 1)]
    return errs, slopes


def hvp_check(objective_cls, gamma, stationary, nt, seed=0, eps=1e-4):
    dom, rng, obj, cfg = setup(objective_cls, gamma, nt, seed=seed)
    v = make_flow(dom, rng, 0.04, nt, stationary, gamma)
    ev = obj.gradient(v)
    w = make_flow(dom, rng, 0.04, nt, stationary, gamma)
    hv = ev.hessian_vector(w, gauss_newton=False)
    gp = obj.gradient(v + eps * w).gradient
    gm = obj.gradient(v - eps * w).gradient
    fd = (1.0 / (2 * eps)) * (gp - gm)
    num = np.sqrt(flow_inner(hv - fd, hv - fd, cfg.quadrature))
    den = np.sqrt(flow_inner(hv, hv, cfg.quadrature))
    return num / den


def symmetry_check(objective_cls, gamma, stationary, nt, seed=0):
    dom, rng, obj, cfg = setup(objective_cls, gamma, nt, seed=seed)
    v = make_flow(dom, rng, 0.04, nt, stationary, gamma)
    ev = obj.gradient(v)
    worst = 0.0
    for _ in range(3):
        w1 = make_flow(dom, rng, 0.04, nt, stationary, gamma)
        w2 = make_flow(dom, rng, 0.04, nt, stationary, gamma)
        a = flow_inner(ev.hessian_vector(w1), w2, cfg.quadrature)
        b = flow_inner(w1, ev.hessian_vector(w2), cfg.quadrature)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    return worst


def gn_definiteness(objective_cls, gamma, stationary, nt, seed=0, ndirs=20):
    dom, rng, obj, cfg = setup(objective_cls, gamma, nt, seed=seed)
    v = make_flow(dom, rng, 0.05, nt, stationary, gamma)
    ev = obj.gradient(v)
    worst = np.inf
    for _ in range(ndirs):
        w = make_flow(dom, rng, 1.0, nt, stationary, gamma, decay=1.0)
        hw = ev.hessian_vector(w, gauss_newton=True)
        quad = flow_inner(hw, w, cfg.quadrature)
        lw = w.map_nodes(lambda c: spectral.apply_helmholtz(dom, c))
        ref = flow_inner(lw, w, cfg.quadrature)
        worst = min(worst, (quad - ref) / ref)
    return worst  # >= -1e-8 required


if __name__ == "__main__":
    np.set_printoptions(precision=3)
    print("gradient checks (rel err at eps=1e-4):")
    for cls, name in ((StateObjective, "state"), (DeformationObjective, "deform")):
        for gamma in (0, 1):
            for stat in (True, False):
                nt = 32
                r = grad_check(cls, gamma, stat, nt)
                print(f"  {name:6s} gamma={gamma} {'st ' if stat else 'nst'} nt={nt}: {r:.3e}")
    print("eps sweep (state, gamma=0, st):", *["%.2e" % e for e in eps_sweep(StateObjective, 0, True, 32)[0]])
    print("eps sweep slopes:", ["%.2f" % s for s in eps_sweep(StateObjective, 0, True, 32)[1]])
    print("hvp newton checks (rel err):")
    for cls, name in ((StateObjective, "state"), (DeformationObjective, "deform")):
        for gamma in (0, 1):
            r = hvp_check(cls, gamma, True, 32)
            print(f"  {name:6s} gamma={gamma} st: {r:.3e}")
    print("hessian symmetry (rel):")
    for cls, name in ((StateObjective, "state"), (DeformationObjective, "deform")):
        r = symmetry_check(cls, 0, True, 32)
        print(f"  {name:6s}: {r:.3e}")
    print("GN definiteness margin (min of (wHw - wLw)/wLw, want >= -1e-8):")
    for cls, name in ((StateObjective, "state"), (DeformationObjective, "deform")):
        for gamma in (0, 1):
            r = gn_definiteness(cls, gamma, True, 32)
            print(f"  {name:6s} gamma={gamma}: {r:.3e}")
