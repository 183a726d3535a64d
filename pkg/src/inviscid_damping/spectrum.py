"""Spectral functions on the continuous spectrum and discrete-eigenvalue checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from .errors import ContourThroughZero, NotApplicable, TooCloseToSpectrum
from .profile import IDENTICALLY_ZERO, inflection_points
from .quadrature import Grid
from .rayleigh import cheb_tools, segment_means, solve_column

_M_II2 = 48


@dataclass
class SpectralData:
    alpha: float
    cgrid: Grid
    rho: np.ndarray
    ii2: np.ndarray
    ii3: np.ndarray
    A: np.ndarray
    B: np.ndarray
    embedding_flags: np.ndarray = field(default=None)
    winding: int | None = None
    alpha_max_sq: float | None = None


def _interior(p, c):
    return p.u0 < c < p.u1


def compute_ii2(p, c):
    """p.v. int_0^1 (u' - u'_c)/(u - c)^2 dy for interior c.

    The double pole cancels; what is left is kappa u'/(u - c), integrated in
    closed form, plus a bounded remainder integrated on Chebyshev nodes of
    each side of y_c.
    """
    yc = float(p.inverse(c))
    upc, uppc = float(p.du(yc)), float(p.d2u(yc))
    kappa = uppc / upc**2
    tools = cheb_tools(_M_II2)
    total = kappa * np.log((p.u1 - c) / (c - p.u0))
    for sigma, L in ((-1, yc), (1, 1 - yc)):
        if L <= 0:
            continue
        w = sigma * L * tools["x"]
        q, d1, p2, p3 = segment_means(p, yc, w)
        rem = (p3 - (uppc / upc) * (d1 + p2) - kappa * w * d1 * p2) / q**2
        total += L * (tools["wq"] @ rem)
    return float(total)


def column_ii3(col):
    """int_0^1 (phi1^{-2} - 1)/(u - c)^2 from a solved Column, in factored form."""
    total = 0.0
    for side in col.sides:
        x = side.tools["x"]
        w = side.w_of(x)
        q = segment_means(side.p, side.yc, w)[0]
        tf = side.tf_nodes
        ph = 1.0 + side.alpha**2 * w**2 * tf
        total += side.integrate(-side.alpha**2 * tf * (ph + 1) / (ph**2 * q**2))
    return float(total)


def compute_ii3(p, alpha, fld, c):
    """II_3 at a c-node of `fld` (or any c when fld is None)."""
    if fld is not None:
        k = int(np.argmin(np.abs(fld.cgrid.nodes - c)))
        if abs(fld.cgrid.nodes[k] - c) <= 1e-14 * max(1.0, abs(c)):
            return column_ii3(fld.column(p, k))
    return column_ii3(solve_column(p, alpha, c))


def compute_AB(p, c, ii2, ii3):
    """A and B; at the end nodes rho = 0 gives A = u(0) - u(1), B = 0 exactly."""
    c = np.asarray(c, dtype=float)
    rho = p.rho(c)
    yc = p.inverse(c)
    upc, uppc = p.du(yc), p.d2u(yc)
    end = rho == 0
    ii2 = np.where(end, 0.0, ii2)
    ii3 = np.where(end, 0.0, ii3)
    A = p.u0 - p.u1 - rho * ii2 + upc * rho * ii3
    B = np.pi * rho * uppc / upc**2
    return A, B


def spectral_data(p, fld) -> SpectralData:
    """II_2, II_3, A, B on every node of the field's c-grid."""
    c = fld.cgrid.nodes
    n = c.size
    ii2 = np.zeros(n)
    ii3 = np.zeros(n)
    for k in range(1, n - 1):
        ii2[k] = compute_ii2(p, c[k])
        ii3[k] = column_ii3(fld.column(p, k))
    A, B = compute_AB(p, c, ii2, ii3)
    sd = SpectralData(fld.alpha, fld.cgrid, p.rho(c), ii2, ii3, A, B)
    sd.embedding_flags = embedding_scan(sd, default_embedding_tol(p))
    return sd


def default_embedding_tol(p):
    return 1e-6 * p.span**2


def embedding_scan(sd, tol):
    return sd.A**2 + sd.B**2 < tol**2


def _fd_laplacian(ny):
    h = 1.0 / (ny - 1)
    y = np.linspace(0.0, 1.0, ny)[1:-1]
    return y, h


def alpha_max(p, ny=257):
    """-min over inflection points y* of the lowest eigenvalue of -d^2 - u''/(u - u(y*)).

    Returns (alpha_max_sq or None, details); None when every lowest eigenvalue
    is non-negative.
    """
    pts = inflection_points(p)
    if pts == IDENTICALLY_ZERO:
        raise NotApplicable("u'' vanishes identically")
    y, h = _fd_laplacian(ny)
    lams = []
    for ys in pts:
        d = y - ys
        with np.errstate(divide="ignore", invalid="ignore"):
            q = segment_means(p, ys, d)[0]
            pot = p.d2u(y) / (d * q)
        near = np.abs(d) < 1e-12
        pot = np.where(near, p.d3u(ys) / p.du(ys), pot)
        diag = 2.0 / h**2 - pot
        off = np.full(y.size - 1, -1.0 / h**2)
        lam = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)[0]
        lams.append(float(lam))
    lmin = min(lams) if lams else np.inf
    value = None if lmin >= 0 else -lmin
    return value, {"inflection_points": list(pts), "lambda_min": lams}


def alpha_max_checked(p, levels=(129, 257), rtol=0.01):
    """alpha_max at two grid levels; accepted when they agree to `rtol`."""
    vals = [alpha_max(p, n) for n in levels]
    if not vals[0][1]["lambda_min"]:
        return None, {"lambda_min": [], "stable": True, "levels": list(levels)}
    lam = [min(v[1]["lambda_min"]) for v in vals]
    stable = abs(lam[1] - lam[0]) <= rtol * max(abs(lam[1]), 1e-300)
    return vals[-1][0], {"lambda_min": lam, "stable": bool(stable), "levels": list(levels)}


def _shoot(p, alpha, c, rtol=1e-10):
    """varphi(1) for varphi'' = alpha^2 varphi + u'' varphi/(u - c), varphi(0) = 0, varphi'(0) = 1.

    Vectorised over an array of complex c.
    """
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    n = c.size
    a2 = alpha**2

    def rhs(y, z):
        v, dv = z[:n], z[n:]
        return np.concatenate([dv, a2 * v + p.d2u(y) * v / (p.u(y) - c)])

    z0 = np.concatenate([np.zeros(n, complex), np.ones(n, complex)])
    sol = solve_ivp(rhs, (0.0, 1.0), z0, method="RK45", rtol=rtol, atol=1e-14)
    return sol.y[:n, -1]


def _distance(p, c):
    c = np.asarray(c, dtype=complex)
    re = np.clip(c.real, p.u0, p.u1)
    return np.abs(c - re)


def wronskian(p, alpha, c):
    """varphi(1, c) for complex c off [u(0), u(1)]; scalar or array input."""
    scalar = np.ndim(c) == 0
    if np.any(_distance(p, c) <= 1e-8):
        raise TooCloseToSpectrum("c is within 1e-8 of the continuous spectrum")
    out = _shoot(p, alpha, c)
    return complex(out[0]) if scalar else out


def argument_change(values):
    """Total change of arg along a closed sampled path, by unwrapping increments."""
    v = np.asarray(values, dtype=complex)
    v = np.append(v, v[0])
    return float(np.sum(np.angle(v[1:] / v[:-1])))


def stadium(p, eps1, n):
    """Closed counter-clockwise path at distance eps1 from [u(0), u(1)]."""
    a, b = p.u0, p.u1
    ls = b - a
    per = 2 * ls + 2 * np.pi * eps1
    s = np.arange(n) * per / n
    out = np.empty(n, complex)
    for i, si in enumerate(s):
        if si < ls:
            out[i] = a + si - 1j * eps1
        elif si < ls + np.pi * eps1:
            th = -np.pi / 2 + (si - ls) / eps1
            out[i] = b + eps1 * np.exp(1j * th)
        elif si < 2 * ls + np.pi * eps1:
            out[i] = b - (si - ls - np.pi * eps1) + 1j * eps1
        else:
            th = np.pi / 2 + (si - 2 * ls - np.pi * eps1) / eps1
            out[i] = a + eps1 * np.exp(1j * th)
    return out


def _contour_change(fn, path_fn, n0, nmax=1 << 15):
    n = n0
    while True:
        vals = fn(path_fn(n))
        if np.min(np.abs(vals)) <= 1e-8:
            raise ContourThroughZero("Wronskian nearly vanishes on the contour")
        steps = np.angle(np.append(vals[1:], vals[0]) / vals)
        if np.max(np.abs(steps)) < np.pi / 4 or n >= nmax:
            return float(np.sum(steps))
        n *= 2


def winding_number(p, alpha, R=None, eps1=None, n=2048, fn=None):
    """(1/2 pi) [change of arg W on |c| = R minus change on the stadium around the spectrum]."""
    R = R if R is not None else 2 * max(abs(p.u0), abs(p.u1)) + 2
    eps1 = eps1 if eps1 is not None else 0.05 * p.span
    fn = fn or (lambda c: _shoot(p, alpha, c))
    outer = _contour_change(fn, lambda m: R * np.exp(2j * np.pi * np.arange(m) / m), n)
    inner = _contour_change(fn, lambda m: stadium(p, eps1, m), n)
    return int(round((outer - inner) / (2 * np.pi)))


def absorption_value(p, alpha, c, eps, rtol=1e-12):
    """rho(c + i eps) int_0^1 phi(y, c + i eps)^{-2} dy by complex shooting from y_c.

    phi is normalised as (u - c_eps) phi1 with phi1(y_c) = 1, phi1'(y_c) = 0,
    i.e. phi(y_c) = -i eps, phi'(y_c) = u'(y_c).
    """
    yc = float(p.inverse(c))
    ce = c + 1j * eps
    a2 = alpha**2

    def rhs(y, z):
        v = z[0]
        return [z[1], a2 * v + p.d2u(y) * v / (p.u(y) - ce), 1.0 / v**2]

    total = 0.0
    for end in (0.0, 1.0):
        z0 = np.array([-1j * eps, p.du(yc), 0.0], dtype=complex)
        sol = solve_ivp(rhs, (yc, end), z0, method="DOP853", rtol=rtol, atol=1e-18)
        total += sol.y[2, -1] * (1 if end == 1.0 else -1)
    return complex((ce - p.u0) * (p.u1 - ce) * total)


def absorption_limit(p, alpha, c, eps_list=(1e-2, 1e-3, 1e-4)):
    """eps -> 0 limit of absorption_value, fitted with the model a + b eps + d eps ln eps."""
    eps = np.asarray(eps_list, dtype=float)
    vals = np.array([absorption_value(p, alpha, c, e) for e in eps])
    M = np.stack([np.ones_like(eps), eps, eps * np.log(eps)], axis=1)
    coef = np.linalg.solve(M.astype(complex), vals)
    return complex(coef[0]), vals
