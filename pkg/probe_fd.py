"""Development probe: gradient vs central FD across discretization options."""

import sys
import numpy as np

sys.path.insert(0, "tests")
from helpers import make_domain, smooth_vector_block

from blreg import spectral, transport
from blreg.transport import TimeFlow, flow_inner
from blreg.objectives import DeformationObjective, ProblemConfig, StateObjective


def band_image(dom, rng, decay=3.0, amp=1.0):
    c = smooth_vector_block(dom, rng, 1.0, decay=decay)[0]
    img = spectral.include(dom, c)
    img = img - img.min()
    return amp * img / img.max()


def probe(objective_cls, gamma, stationary, interp, image_grad, quadrature, n_steps,
          contraction="transposed", amp=0.05, eps=1e-4, ndirs=2, seed=0):
    dom = make_domain((32, 32), (8, 8), alpha=0.05, order=2)
    rng = np.random.default_rng(seed)
    I0 = band_image(dom, rng)
    I1 = band_image(dom, rng)
    cfg = ProblemConfig(sigma2=1.0, gamma=gamma, n_time_steps=n_steps, interp=interp,
                        image_grad=image_grad, quadrature=quadrature,
                        contraction=contraction)
    obj = objective_cls(dom, I0, I1, cfg)

    if stationary:
        vals = smooth_vector_block(dom, rng, amp)[None]
    else:
        vals = np.stack([smooth_vector_block(dom, rng, amp) for _ in range(n_steps + 1)])
    v = TimeFlow(dom, vals, n_steps, stationary)
    if gamma:
        v = v.map_nodes(lambda c: spectral.make_divergence_free(dom, c))

    ev = obj.gradient(v)
    worst = 0.0
    for k in range(ndirs):
        if stationary:
            wv = smooth_vector_block(dom, rng, amp)[None]
        else:
            wv = np.stack([smooth_vector_block(dom, rng, amp) for _ in range(n_steps + 1)])
        w = TimeFlow(dom, wv, n_steps, stationary)
        if gamma:
            w = w.map_nodes(lambda c: spectral.make_divergence_free(dom, c))
        pred = flow_inner(ev.gradient, w, quadrature)
        fd = (obj.energy(v + eps * w) - obj.energy(v - eps * w)) / (2 * eps)
        rel = abs(pred - fd) / max(abs(fd), 1e-30)
        worst = max(worst, rel)
    return worst


if __name__ == "__main__":
    print("=== state objective, gamma=0, stationary ===")
    for interp, igrad, quad, nt in [
        ("linear", "central", "trapezoid", 10),
        ("linear", "central", "trapezoid", 64),
        ("fourier", "central", "trapezoid", 64),
        ("fourier", "spectral", "trapezoid", 64),
        ("fourier", "spectral", "simpson", 32),
        ("fourier", "spectral", "simpson", 64),
    ]:
        r = probe(StateObjective, 0, True, interp, igrad, quad, nt)
        print(f"  {interp:8s} {igrad:9s} {quad:10s} nt={nt:3d}  rel={r:.3e}")

    print("=== deformation objective (transposed), gamma=0, stationary ===")
    for interp, igrad, quad, nt in [
        ("linear", "central", "trapezoid", 10),
        ("fourier", "spectral", "simpson", 32),
        ("fourier", "spectral", "simpson", 64),
    ]:
        r = probe(DeformationObjective, 0, True, interp, igrad, quad, nt)
        print(f"  {interp:8s} {igrad:9s} {quad:10s} nt={nt:3d}  rel={r:.3e}")

    print("=== deformation objective (direct), gamma=0, stationary ===")
    r = probe(DeformationObjective, 0, True, "fourier", "spectral", "simpson", 64,
              contraction="direct")
    print(f"  direct contraction rel={r:.3e}")
