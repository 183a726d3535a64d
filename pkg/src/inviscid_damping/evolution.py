"""Continuous-spectrum representation of one Fourier mode and the derived observables.

For each c-node the spectral density rho mu combines A, B with II_1 of the
initial vorticity; the stream function is

    psi_hat(t, y) = (1/pi) int rho(c) mu(c) Gamma(y, c) e^{-i alpha c t} dc

and the vorticity in the shear-following frame is

    W_hat(t, y) = omega_hat_0(y) - (u''(y)/pi) int (e^{i alpha t (u(y)-c)} - 1)/(u(y)-c) rho mu Gamma dc.

The c-integrals are taken in y' = u^{-1}(c) with a split product rule:
Gamma(y_j, .) is split into smooth one-sided parts and a coefficient of
ln|y_j - y'|, both interpolated by piecewise cubics from the grid, while the
oscillatory weight is evaluated exactly at the quadrature points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import EmbeddingEigenvalue, InsufficientWindow
from .quadrature import gauss_legendre, split_rule, trapezoid_weights
from .rayleigh import segment_means
from .spectrum import default_embedding_tol

# named analytic shapes: (f, f', f'')
_PI = np.pi
SHAPES = {
    "sine": (lambda y: np.sin(_PI * y), lambda y: _PI * np.cos(_PI * y),
             lambda y: -_PI**2 * np.sin(_PI * y)),
    "sine2": (lambda y: np.sin(2 * _PI * y), lambda y: 2 * _PI * np.cos(2 * _PI * y),
              lambda y: -4 * _PI**2 * np.sin(2 * _PI * y)),
    "cosine": (lambda y: np.cos(_PI * y), lambda y: -_PI * np.sin(_PI * y),
               lambda y: -_PI**2 * np.cos(_PI * y)),
    "bump": (lambda y: np.exp(-((y - 0.4) ** 2) / 0.05),
             lambda y: -2 * (y - 0.4) / 0.05 * np.exp(-((y - 0.4) ** 2) / 0.05),
             lambda y: (4 * (y - 0.4) ** 2 / 0.05**2 - 2 / 0.05) * np.exp(-((y - 0.4) ** 2) / 0.05)),
    "zero": (lambda y: np.zeros_like(np.asarray(y, dtype=float)),) * 3,
}


@dataclass(frozen=True)
class ModeData:
    """omega_hat_0(alpha, .) with its first two derivatives, as callables of y."""

    alpha: int
    f: object
    df: object
    d2f: object

    def __call__(self, y):
        return np.asarray(self.f(np.asarray(y, dtype=float)), dtype=complex)


def shape_mode(alpha, name, amplitude=1.0):
    try:
        f, df, d2f = SHAPES[name]
    except KeyError:
        raise ValueError(f"unknown initial shape {name!r}; known: {sorted(SHAPES)}") from None
    a = complex(amplitude)
    return ModeData(int(alpha), lambda y: a * f(y), lambda y: a * df(y), lambda y: a * d2f(y))


def table_mode(alpha, y, values):
    """Quintic-spline mode from samples (complex values allowed)."""
    y = np.asarray(y, dtype=float)
    v = np.asarray(values, dtype=complex)
    re = make_interp_spline(y, v.real, k=5)
    im = make_interp_spline(y, v.imag, k=5)
    ders = [(re.derivative(n) if n else re, im.derivative(n) if n else im) for n in range(3)]
    fns = [lambda yy, a=a, b=b: a(yy) + 1j * b(yy) for a, b in ders]
    return ModeData(int(alpha), *fns)


@dataclass
class InitialData:
    """Positive-alpha modes; the alpha < 0 modes are their conjugates (real vorticity)."""

    modes: dict

    def __post_init__(self):
        if any(a == 0 for a in self.modes):
            raise ValueError("the alpha = 0 mode is excluded (zero x-mean)")

    def norms(self, ny=1025):
        """H^{-1}_x L^2, H^{-1}_x H^1, H^{-1}_x H^2 norms over both signs of alpha."""
        y = np.linspace(0.0, 1.0, ny)
        w = trapezoid_weights(y)
        out = np.zeros(3)
        for a, m in self.modes.items():
            vals = [np.abs(np.asarray(g(y), dtype=complex)) ** 2 for g in (m.f, m.df, m.d2f)]
            l2 = [w @ v for v in vals]
            per = np.array([l2[0], l2[0] + l2[1], l2[0] + l2[1] + l2[2]])
            out += 2 * 2 * np.pi * per / a**2
        return dict(zip(("L2", "H1", "H2"), np.sqrt(out)))


def _omega_mean_slope(data, yc, w):
    """int_0^1 omega0'(y_c + t w) dt, the segment mean of the derivative."""
    s, g = gauss_legendre(20)
    pts = yc + np.asarray(w)[..., None] * s
    return np.asarray(data.df(pts), dtype=complex) @ g


def column_ii1(col, data):
    """II_1 of one solved Column (interior c) for the mode `data`."""
    p = None
    total = 0.0 + 0.0j
    for side in col.sides:
        p = side.p
        tools = side.tools
        x = tools["x"]
        w = side.w_of(x)
        q, d1, p2, _ = segment_means(p, side.yc, w)
        tf = side.tf_nodes
        a2 = side.alpha**2
        ph = 1.0 + a2 * w**2 * tf
        om_c = complex(data(side.yc))
        hF = ph * _omega_mean_slope(data, side.yc, w) + om_c * a2 * w * tf
        n2 = tools["S"] @ hF
        upc = side.upc
        rem = (om_c * (-a2 * w * tf * (ph + 1) / (ph**2 * q**2)
                       + (-upc * p2 - q * d1) / (upc**2 * q**2))
               + n2 / (q**2 * ph**2))
        total += side.integrate(rem)
    upc = col.sides[0].upc
    om_c = complex(data(col.yc))
    return complex(total + om_c / upc**2 * np.log((p.u1 - col.c) / (col.c - p.u0)))


def compute_ii1(p, fld, data, k):
    """II_1 at c-node k of a RayleighField."""
    return column_ii1(fld.column(p, k), data)


@dataclass
class MuData:
    mu: np.ndarray
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    rho_mu: np.ndarray
    ii1: np.ndarray
    identity_error: float


def compute_mu(p, alpha, sd, ii1, omega_c, tol=None):
    """mu, mu_+, mu_- on the c-grid from A, B, II_1 and omega_hat_0(y_c).

    With the rho factored out of C and D,
        mu = (A pi omega_c / u'_c + B u'_c II_1) / (A^2 + B^2),
    finite at the ends where rho mu = 0.
    """
    tol = default_embedding_tol(p) if tol is None else tol
    A, B, rho = sd.A, sd.B, sd.rho
    den = A**2 + B**2
    if np.any(den < tol**2):
        raise EmbeddingEigenvalue(f"A^2 + B^2 < {tol**2:.3e} at c = {sd.cgrid.nodes[den < tol**2]}")
    yc = p.inverse(sd.cgrid.nodes)
    upc = p.du(yc)
    om = np.asarray(omega_c, dtype=complex)
    ii1 = np.where(rho == 0, 0.0, ii1)
    cc = np.pi * om / upc
    dd = upc * ii1
    mu = (A * cc + B * dd) / den
    mu_plus = rho * (1j * dd - cc) / (alpha * (A - 1j * B))
    mu_minus = rho * (1j * dd + cc) / (alpha * (A + 1j * B))
    diff = mu_minus - mu_plus - 2.0 / alpha * rho * mu
    scale = max(1.0, float(np.max(np.abs(mu_minus))), float(np.max(np.abs(mu_plus))))
    err = float(np.max(np.abs(diff)) / scale)
    if err > 1e-10:
        raise AssertionError(f"mu identity violated: {err:.3e}")
    return MuData(mu, mu_plus, mu_minus, rho * mu, ii1, err)


def mu_for_mode(p, fld, sd, data):
    n = fld.cgrid.nodes.size
    ii1 = np.zeros(n, dtype=complex)
    for k in range(1, n - 1):
        ii1[k] = compute_ii1(p, fld, data, k)
    return compute_mu(p, fld.alpha, sd, ii1, data(fld.ygrid.nodes))


def _expm1_over(lam, theta):
    """(e^{i lam theta} - 1)/theta written as i lam sinc e^{i lam theta / 2}; no cancellation."""
    half = 0.5 * lam * theta
    return 1j * lam * np.sinc(half / np.pi) * np.exp(1j * half)


class Representation:
    """Precomputed quadrature for psi_hat, d_y psi_hat and W_hat of one mode."""

    def __init__(self, p, fld, sd, data, mu=None, nq=16, levels=24):
        self.p, self.fld, self.sd, self.data = p, fld, sd, data
        self.alpha = fld.alpha
        self.mu = mu or mu_for_mode(p, fld, sd, data)
        y = fld.ygrid.nodes
        n = y.size
        self.y = y
        self.u_y = p.u(y)
        self.d2u_y = p.d2u(y)
        self.omega0 = data(y)
        rm = self.mu.rho_mu
        scaled = {}
        for branch, src in (("plus", fld.plus), ("minus", fld.minus)):
            for key in ("gs", "lam", "dgs", "dlam"):
                v = src[key] * rm[None, :]
                v[:, rm == 0] = 0.0
                scaled[branch, key] = v
        pts, wts, gpsi, gdpsi, seg = [], [], [], [], [0]
        for j in range(n):
            rule = split_rule(n, j, nq=nq, levels=levels)
            vals = {}
            for key in ("gs", "lam", "dgs", "dlam"):
                vals[key] = rule.interpolate(scaled["plus", key][j], scaled["minus", key][j])
            gpsi.append((vals["gs"] + rule.logdist * vals["lam"]) / np.pi)
            gdpsi.append((vals["dgs"] + rule.logdist * vals["dlam"]) / np.pi)
            pts.append(rule.pts)
            wts.append(rule.qw * p.du(rule.pts))
            seg.append(seg[-1] + rule.pts.size)
        self.pts = np.concatenate(pts)
        self.u_pts = p.u(self.pts)
        self.wts = np.concatenate(wts)
        self.gpsi = np.concatenate(gpsi) * self.wts
        self.gdpsi = np.concatenate(gdpsi) * self.wts
        self.seg = np.array(seg[:-1])
        self.row = np.repeat(np.arange(n), np.diff(seg))

    def _sum(self, v):
        return np.add.reduceat(v, self.seg)

    def psi_hat(self, t):
        ph = np.exp(-1j * self.alpha * t * self.u_pts)
        out = self._sum(ph * self.gpsi)
        out[0] = out[-1] = 0.0
        return out

    def dpsi_hat(self, t):
        ph = np.exp(-1j * self.alpha * t * self.u_pts)
        return self._sum(ph * self.gdpsi)

    def w_hat(self, t):
        if t == 0:
            return self.omega0.copy()
        theta = self.u_y[self.row] - self.u_pts
        corr = self._sum(_expm1_over(self.alpha * t, theta) * self.gpsi)
        # gpsi carries the 1/pi of the formula
        return self.omega0 - self.d2u_y * corr


def norm_l2(y, v):
    return float(np.sqrt(trapezoid_weights(y) @ (np.abs(v) ** 2)))


def fd_derivative(y, v, order=1):
    """Fourth-order finite differences on a uniform grid (one-sided near the walls)."""
    h = y[1] - y[0]
    v = np.asarray(v)
    out = np.empty_like(v)
    if order == 1:
        out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
        c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
        cb = np.array([-3, -10, 18, -6, 1]) / (12 * h)
        out[0] = c @ v[:5]
        out[1] = cb @ v[:5]
        out[-1] = -(c @ v[::-1][:5])
        out[-2] = -(cb @ v[::-1][:5])
    else:
        out[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * h**2)
        c = np.array([45, -154, 214, -156, 61, -10]) / (12 * h**2)
        cb = np.array([10, -15, -4, 14, -6, 1]) / (12 * h**2)
        out[0] = c @ v[:6]
        out[1] = cb @ v[:6]
        out[-1] = c @ v[::-1][:6]
        out[-2] = cb @ v[::-1][:6]
    return out


def velocity(modes, y, nx=64, real=True):
    """Physical (V1, V2) on an x-y grid from {alpha: (psi_hat, dpsi_hat or None)}.

    Convention f(x, y) = sum_alpha f_hat(alpha, y) e^{i alpha x}, x in [0, 2 pi).
    V1_hat = d_y psi_hat (4th-order differences when not supplied), V2_hat = -i alpha psi_hat.
    With `real`, each alpha > 0 mode is accompanied by its conjugate at -alpha.
    """
    x = 2 * np.pi * np.arange(nx) / nx
    v1 = np.zeros((nx, y.size), dtype=complex)
    v2 = np.zeros((nx, y.size), dtype=complex)
    for a, (ps, dps) in modes.items():
        ps = np.asarray(ps, dtype=complex)
        dps = fd_derivative(y, ps) if dps is None else np.asarray(dps, dtype=complex)
        terms = [(a, dps, -1j * a * ps)]
        if real:
            terms.append((-a, np.conj(dps), np.conj(-1j * a * ps)))
        for aa, h1, h2 in terms:
            e = np.exp(1j * aa * x)[:, None]
            v1 += e * h1[None, :]
            v2 += e * h2[None, :]
    return x, v1, v2


def mode_norms(alpha, y, psi, dpsi, real=True):
    """Squared L^2(T x [0,1]) norms (||V||^2, ||V2||^2) of one mode and, with `real`, its conjugate."""
    mult = 2 * np.pi * (2 if real else 1)
    w = trapezoid_weights(y)
    v1 = w @ np.abs(dpsi) ** 2
    v2 = alpha**2 * (w @ np.abs(psi) ** 2)
    return mult * (v1 + v2), mult * v2


def decay_metrics(t, v, v2, window=(16.0, 256.0)):
    """Log-log slopes of ||V|| and ||V2|| over the window, plus sup t||V|| and sup t^2||V2||."""
    t = np.asarray(t, dtype=float)
    sel = (t >= window[0]) & (t <= window[1])
    ts = t[sel]
    if ts.size < 8 or ts.max() < 10 * ts.min():
        raise InsufficientWindow("need at least 8 samples spanning a decade")
    lv = np.log(np.asarray(v, dtype=float)[sel])
    lv2 = np.log(np.asarray(v2, dtype=float)[sel])
    lt = np.log(ts)
    s1 = np.polyfit(lt, lv, 1)
    s2 = np.polyfit(lt, lv2, 1)
    return {"slope_V": float(s1[0]), "slope_V2": float(s2[0]),
            "const_V": float(np.exp(s1[1])), "const_V2": float(np.exp(s2[1])),
            "sup_tV": float(np.max(ts * np.exp(lv))),
            "sup_t2V2": float(np.max(ts**2 * np.exp(lv2)))}


def scattering_profile(rep, T_list, ds=0.25):
    """Terminal W_hat, the Cauchy residuals ||W(T) - W(2T)||, and a history cross-check.

    The cross-check rebuilds W_infinity from omega0 - i alpha u'' int_0^inf e^{i alpha s u} psi_hat ds
    with composite Simpson over the psi_hat history up to T_max and a tail
    T psi-term that assumes the non-oscillating part decays like s^{-2}.
    """
    y = rep.y
    T_list = sorted(T_list)
    Tmax = 2 * T_list[-1]
    W = {T: rep.w_hat(T) for T in T_list + [Tmax]}
    resid = [norm_l2(y, W[T] - W[2 * T]) if 2 * T in W else norm_l2(y, W[T] - rep.w_hat(2 * T))
             for T in T_list]
    n = int(round(Tmax / ds))
    n += n % 2
    s = np.linspace(0.0, Tmax, n + 1)
    wts = np.full(n + 1, 2.0)
    wts[1::2] = 4.0
    wts[0] = wts[-1] = 1.0
    wts *= (s[1] - s[0]) / 3.0
    acc = np.zeros(y.size, dtype=complex)
    for si, wi in zip(s, wts):
        acc += wi * np.exp(1j * rep.alpha * si * rep.u_y) * rep.psi_hat(si)
    tail = Tmax * np.exp(1j * rep.alpha * Tmax * rep.u_y) * rep.psi_hat(Tmax)
    factor = 1j * rep.alpha * rep.d2u_y
    w_hist = rep.omega0 - factor * acc
    w_inf_hist = w_hist - factor * tail
    w_inf = W[Tmax]
    scale = max(norm_l2(y, w_inf), 1e-300)
    return {"w_inf": w_inf, "w_inf_history": w_inf_hist, "T": T_list, "residuals": resid,
            "Tmax": Tmax,
            "history_vs_terminal": norm_l2(y, w_hist - w_inf) / scale,
            "cross_rel": norm_l2(y, w_inf_hist - w_inf) / scale}


def mu_norm_diagnostics(p, cgrid, mu, data, y=None):
    """L^2-type norms of mu, rho mu and its c-derivatives, with ratios to omega0 norms."""
    c = cgrid.nodes
    w = cgrid.weights
    rho = p.rho(c)
    rm = mu.rho_mu
    d1 = np.gradient(rm, c, edge_order=2)
    d2 = np.gradient(d1, c, edge_order=2)
    y = np.linspace(0.0, 1.0, 1025) if y is None else y
    om = [np.asarray(g(y), dtype=complex) for g in (data.f, data.df, data.d2f)]
    l2 = [norm_l2(y, v) for v in om]
    n0, n1, n2 = l2[0], np.hypot(l2[0], l2[1]), np.sqrt(l2[0] ** 2 + l2[1] ** 2 + l2[2] ** 2)

    def nrm(v):
        return float(np.sqrt(w @ np.abs(v) ** 2))

    rep = {"mu": nrm(mu.mu), "rho_mu": nrm(rm), "d_rho_mu": nrm(d1), "rho_d2_rho_mu": nrm(rho * d2),
           "omega0_L2": n0, "omega0_H1": n1, "omega0_H2": n2}
    safe = lambda a, b: a / b if b > 0 else 0.0  # noqa: E731
    rep.update({"ratio_mu": safe(rep["mu"], n0), "ratio_rho_mu": safe(rep["rho_mu"], n0),
                "ratio_d_rho_mu": safe(rep["d_rho_mu"], n1),
                "ratio_rho_d2_rho_mu": safe(rep["rho_d2_rho_mu"], n2)})
    return rep


@dataclass
class ModeEvolution:
    alpha: float
    mu: MuData
    tgrid: np.ndarray
    psi_hat: np.ndarray
    dpsi_hat: np.ndarray
    w_hat: np.ndarray
    extra: dict = field(default_factory=dict)


def evolve_mode(rep, tgrid):
    t = np.asarray(tgrid, dtype=float)
    psi = np.array([rep.psi_hat(ti) for ti in t])
    dpsi = np.array([rep.dpsi_hat(ti) for ti in t])
    w = np.array([rep.w_hat(ti) for ti in t])
    return ModeEvolution(rep.alpha, rep.mu, t, psi, dpsi, w)


def default_tgrid():
    return np.array([0.0] + [2.0**k for k in range(9)])
