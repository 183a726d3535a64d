"""Rayleigh solutions on the continuous spectrum.

For each critical layer c = u(y_c) the regular solution is written as
phi = (u - c) phi1, and phi1 is built as a Neumann series of a positive
integral operator.  For Couette flow the answer is known in closed form, so
we start there, then look at a curved profile and check the series against
direct ODE integration.
"""

import numpy as np

from inviscid_damping import make_profile
from inviscid_damping.rayleigh import shoot_phi, solve_column

y = np.linspace(0.0, 1.0, 401)

# Couette: phi1 = sinh(alpha w)/(alpha w), w = y - y_c
couette = make_profile("couette")
print("Couette, max relative error of phi1 against sinh(aw)/(aw)")
for alpha in (1, 2, 4, 8):
    col = solve_column(couette, alpha, 0.3)
    w = alpha * (y - 0.3)
    exact = np.ones_like(w)
    exact[w != 0] = np.sinh(w[w != 0]) / w[w != 0]
    err = np.max(np.abs(col.phi1(y) / exact - 1))
    print(f"  alpha={alpha}: {err:.1e}  (series terms: {max(s.terms for s in col.sides)})")

# a curved profile: phi1 >= 1, growing away from the layer
p = make_profile("sinusoidal-perturbed", [0.25])
c = p.u(0.42)
col = solve_column(p, 3, c)
vals = col.at(y)
print(f"\nsinusoidal-perturbed, alpha=3, y_c=0.42: min phi1 = {vals['phi1'].min():.15f}")
print(f"  phi1 at the walls: {vals['phi1'][0]:.4f}, {vals['phi1'][-1]:.4f}")

# independent check: integrate the ODE outward from the layer
far = y[np.abs(y - col.yc) > 0.02]
sh = shoot_phi(p, 3, c, far)
print(f"  series vs shooting, max relative gap: {np.max(np.abs(sh / col.at(far)['phi'] - 1)):.1e}")

# Gamma: phi times int phi^-2 anchored at the nearer wall of each side.  Both
# one-sided limits at the layer equal -1/u'(y_c); the slope carries a log term.
g = vals["gamma"]
print(f"  Gamma at y_c: {g[np.argmin(np.abs(y - col.yc))]:.6f}, -1/u'(y_c) = {-1 / p.du(col.yc):.6f}")
print(f"  Gamma at the walls: {g[0]:.1e}, {g[-1]:.1e}")
