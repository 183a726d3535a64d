"""Reference method-of-lines solver for one Fourier mode of the linearised vorticity equation.

    d/dt w + i alpha u w + i alpha u'' psi = 0,   (alpha^2 - d_y^2) psi = w,   psi(0) = psi(1) = 0.

Finite differences in y, classical RK4 in time.  Shares no code with the
spectral representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from .errors import SingularSystem, StepTooLarge


class Elliptic:
    """Factorised Dirichlet operator alpha^2 - D2 on a uniform grid."""

    def __init__(self, alpha, ny, order=2):
        if order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        self.alpha, self.ny, self.order = float(alpha), ny, order
        h = 1.0 / (ny - 1)
        m = ny - 2
        a2 = self.alpha**2
        if order == 2:
            main = np.full(m, a2 + 2.0 / h**2)
            off = np.full(m - 1, -1.0 / h**2)
        else:
            # (1 + delta^2/12) alpha^2 psi - delta^2 psi / h^2 = (1 + delta^2/12) w
            main = np.full(m, a2 * (1 - 2.0 / 12) + 2.0 / h**2)
            off = np.full(m - 1, a2 / 12 - 1.0 / h**2)
        self.matrix = diags([off, main, off], [-1, 0, 1], format="csc", dtype=complex)
        try:
            self.lu = splu(self.matrix)
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from exc

    def rhs(self, w):
        if self.order == 2:
            return w[1:-1]
        return w[1:-1] + (w[2:] - 2 * w[1:-1] + w[:-2]) / 12.0

    def solve(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.zeros(self.ny, dtype=complex)
        out[1:-1] = self.lu.solve(self.rhs(w))
        return out

    def apply(self, psi):
        """Discrete operator applied to interior values (psi with zero walls)."""
        return self.matrix @ np.asarray(psi, dtype=complex)[1:-1]


def elliptic_solve(alpha, omega_hat, order=2):
    """(alpha^2 - D2)^{-1} omega_hat with homogeneous Dirichlet walls."""
    return Elliptic(alpha, len(omega_hat), order).solve(omega_hat)


def stability_budget(alpha, p):
    umax = max(abs(p.u0), abs(p.u1))
    return 2.8 / (abs(alpha) * umax)


@dataclass
class StepperState:
    alpha: float
    ygrid: np.ndarray
    omega_hat: np.ndarray
    time: float
    dt: float
    elliptic: Elliptic
    u: np.ndarray = field(repr=False)
    d2u: np.ndarray = field(repr=False)
    budget: float = np.inf
    steps: int = 0

    @property
    def psi_hat(self):
        return self.elliptic.solve(self.omega_hat)

    def energy(self):
        h = self.ygrid[1] - self.ygrid[0]
        v = np.abs(self.omega_hat) ** 2
        return float(h * (v.sum() - 0.5 * (v[0] + v[-1])))


def make_state(p, alpha, omega0, ny=None, order=4, dt=None):
    """Initial stepper state from samples (or a callable) of omega_hat at t = 0."""
    if callable(omega0):
        y = np.linspace(0.0, 1.0, ny)
        w = np.asarray(omega0(y), dtype=complex)
    else:
        w = np.asarray(omega0, dtype=complex)
        y = np.linspace(0.0, 1.0, w.size)
    budget = stability_budget(alpha, p)
    return StepperState(float(alpha), y, w, 0.0, dt or 0.0, Elliptic(alpha, y.size, order),
                        p.u(y), p.d2u(y), budget)


def _rate(state, w):
    psi = state.elliptic.solve(w)
    return -1j * state.alpha * (state.u * w + state.d2u * psi)


def step(state, dt):
    """One classical RK4 step; returns a new state."""
    if dt > state.budget:
        raise StepTooLarge(f"dt={dt} exceeds the RK4 budget {state.budget}")
    w = state.omega_hat
    k1 = _rate(state, w)
    k2 = _rate(state, w + 0.5 * dt * k1)
    k3 = _rate(state, w + 0.5 * dt * k2)
    k4 = _rate(state, w + dt * k3)
    new = w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return StepperState(state.alpha, state.ygrid, new, state.time + dt, dt, state.elliptic,
                        state.u, state.d2u, state.budget, state.steps + 1)


def choose_dt(state, tol):
    """Fixed step from the RK4 error scale (nu dt)^4 ~ tol, capped by the budget."""
    nu = abs(state.alpha) * float(np.max(np.abs(state.u))) + 1e-300
    return min(0.5 * state.budget, tol**0.25 / nu)


def evolve_to(state, t_target, tol=1e-8, samples=None):
    """Integrate to t_target; returns (final state, [(t, omega_hat, psi_hat), ...]).

    Sample times are hit exactly: each interval between consecutive samples is
    split into equal steps no longer than the chosen dt.
    """
    if t_target < state.time:
        raise ValueError("t_target is in the past")
    dt = choose_dt(state, tol)
    times = sorted(set([state.time, t_target] + [s for s in (samples or []) if state.time <= s <= t_target]))
    out = [(state.time, state.omega_hat.copy(), state.psi_hat)]
    for t0, t1 in zip(times[:-1], times[1:]):
        n = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
        h = (t1 - t0) / n
        for _ in range(n):
            state = step(state, h)
        state.time = t1
        out.append((t1, state.omega_hat.copy(), state.psi_hat))
    if samples is not None:
        keep = set(samples) | {t_target}
        out = [o for o in out if o[0] in keep]
    return state, out
