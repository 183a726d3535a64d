"""Spectral functions and the guards run before any time evolution.

A(c) and B(c) decide whether the resolvent has embedded eigenvalues
(A^2 + B^2 = 0 somewhere inside the range of u), and the winding number of
the Wronskian counts discrete eigenvalues.  Limiting absorption from the
complex plane gives an independent value of A - iB.
"""

import numpy as np

from inviscid_damping import make_profile
from inviscid_damping.rayleigh import build_field
from inviscid_damping.spectrum import (absorption_limit, alpha_max_checked, spectral_data,
                                       winding_number)

profiles = {
    "couette": make_profile("couette"),
    "quadratic": make_profile("quadratic", [0.2]),
    "sinusoidal": make_profile("sinusoidal-perturbed", [0.25]),
}

alpha = 1
for name, p in profiles.items():
    sd = spectral_data(p, build_field(p, alpha, 129))
    inner = slice(1, -1)
    gap = np.min(np.hypot(sd.A, sd.B)[inner])
    print(f"{name:11s} min sqrt(A^2+B^2) = {gap:.3f}   max II3 = {sd.ii3[inner].max():.3f}   "
          f"winding = {winding_number(p, alpha)}")

    # limiting absorption at one node, from c + i eps down to the axis
    k = 40
    c = sd.cgrid.nodes[k]
    lim, raw = absorption_limit(p, alpha, c)
    target = (sd.A[k] - 1j * sd.B[k]) / p.du(p.inverse(c))
    print(f"{'':11s} c={c:.3f}: eps=1e-2 gives {raw[0]:.6f}, extrapolated {lim:.6f}, "
          f"from A, B {target:.6f}")

# inflection points make the variational bound meaningful
for b in (0.25, 0.7):
    am, info = alpha_max_checked(make_profile("sinusoidal-perturbed", [b]))
    lam = ", ".join(f"{v:.3f}" for v in info["lambda_min"])
    print(f"sinusoidal b={b}: alpha_max^2 = {am}  (lowest eigenvalue at 129/257 nodes: {lam})")
