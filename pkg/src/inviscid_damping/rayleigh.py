"""Homogeneous Rayleigh solutions for real wave speed c.

For c = u(y_c) the solution is written phi = (u - c) phi1 with phi1(y_c) = 1,
and phi1 solves the fixed point phi1 = 1 + alpha^2 T phi1, where

    T f(y) = int_{y_c}^y (u - c)^{-2} int_{y_c}^{y'} f (u - c)^2 dz dy'.

With w = y - y_c and Q(w) = (u(y_c + w) - c) / w,

    T f(w) = w^2 int_0^1 s h(s w) ds,   h(v) = int_0^1 f(t v) t^2 (Q(t v) / Q(v))^2 dt,

so T f / w^2 (stored as `tfac`) is bounded and no 0/0 is ever formed.
Each side of the critical layer is represented by a Chebyshev interpolant in
x = |w| / L, L the distance from y_c to the wall on that side.

The Green factor Gamma = phi int_a^y phi^{-2} (a = 0 below the layer, a = 1
above) is assembled from the exact primitive

    phi^{-2} = d/dz E + r,   E = -1/(u'_c (u - c)) - (kappa/u'_c) ln|u - c|,

kappa = u''(y_c)/u'(y_c)^2, with r bounded; this splits Gamma into a smooth
part plus lam * ln|y - y_c| with lam = -(kappa/u'_c) phi.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp

from .errors import NoConvergence
from .quadrature import Grid, gauss_legendre, image_grid, uniform_grid

_NMEAN = 20


@lru_cache(maxsize=16)
def cheb_tools(m, nt=None):
    """Reference Chebyshev machinery on x in [0, 1] with m first-kind nodes.

    Returns a dict with nodes `x`, value->coefficient map `vinv`, the matrix
    `S` of f -> int_0^1 s f(s x) ds, the tensor `E` with
    E[i, k, :] @ f = f(t_k x_i), the Gauss nodes/weights `t`, `gt` and the
    integration weights `wq` for int_0^1 f dx.
    """
    nt = nt or m + 8
    theta = np.pi * (np.arange(m) + 0.5) / m
    x = 0.5 * (1.0 - np.cos(theta))
    vinv = np.linalg.inv(C.chebvander(2 * x - 1, m - 1))
    t, gt = gauss_legendre(nt)
    sx = t[None, :] * x[:, None]
    E = C.chebvander(2 * sx - 1, m - 1) @ vinv
    S = np.einsum("k,k,ikm->im", gt, t, E)
    n = np.arange(m)
    # int_0^1 T_n(2x - 1) dx = (1 + (-1)^n) / (2 (1 - n^2)), zero for odd n
    mom = np.where(n % 2 == 0, 1.0 / np.where(n == 1, 1, 1 - n**2), 0.0)
    wq = mom @ vinv
    return {"x": x, "vinv": vinv, "S": S, "E": E, "t": t, "gt": gt, "wq": wq}


def segment_means(p, yc, w):
    """Segment averages along [y_c, y_c + w] that replace divided differences.

    Q  = int_0^1 u'(y_c + s w) ds            = (u - c) / w
    D1 = int_0^1 u''(y_c + s w) ds           = (u' - u'_c) / w
    P2 = int_0^1 (1 - s) u''(y_c + s w) ds   = (Q - u'_c) / w
    P3 = int_0^1 (1 - s) u'''(y_c + s w) ds  = (D1 - u''_c) / w
    """
    s, g = gauss_legendre(_NMEAN)
    w = np.asarray(w, dtype=float)
    pts = yc + w[..., None] * s
    d1, d2, d3 = p.du(pts), p.d2u(pts), p.d3u(pts)
    return (d1 @ g, d2 @ g, d2 @ (g * (1 - s)), d3 @ (g * (1 - s)))


def apply_T(p, c, f, y, n=40):
    """T f at points y by the double Gauss kernel form; f is a callable of y."""
    yc = p.inverse(c)
    w = np.asarray(y, dtype=float) - yc
    s, gs = gauss_legendre(n)
    t, gt = gauss_legendre(n)
    sw = w[:, None] * s
    tsw = sw[..., None] * t
    q_sw = segment_means(p, yc, sw)[0]
    q_tsw = segment_means(p, yc, tsw)[0]
    inner = (f(yc + tsw) * t**2 * (q_tsw / q_sw[..., None]) ** 2) @ gt
    return w**2 * ((inner * s) @ gs)


@dataclass
class Side:
    """phi1 on one side of the critical layer, in the reference variable x = |w|/L."""

    p: object
    alpha: float
    yc: float
    L: float
    sigma: int
    tf_nodes: np.ndarray
    terms: int

    def __post_init__(self):
        tools = cheb_tools(self.tf_nodes.size)
        self.tools = tools
        self.ctf = tools["vinv"] @ self.tf_nodes
        self.dctf = C.chebder(self.ctf)
        p, yc = self.p, self.yc
        self.upc = float(p.du(yc))
        self.kappa = float(p.d2u(yc)) / self.upc**2
        x = tools["x"]
        r = self._r(x, self.tf_nodes)
        cint = C.chebint(tools["vinv"] @ r)
        self.cint = cint
        self.cint_end = C.chebval(1.0, cint)
        c = float(p.u(yc))
        ua = float(p.u(0.0 if self.sigma < 0 else 1.0)) - c
        self.E_anchor = -1.0 / (self.upc * ua) - self.kappa / self.upc * np.log(abs(ua))

    @property
    def c(self):
        return float(self.p.u(self.yc))

    def w_of(self, x):
        return self.sigma * self.L * np.asarray(x, dtype=float)

    def tfac(self, x):
        return C.chebval(2 * np.asarray(x, dtype=float) - 1, self.ctf)

    def _r(self, x, tf):
        """Bounded remainder r = phi^{-2} - dE/dz at reference points."""
        w = self.w_of(x)
        q, d1, p2, p3 = segment_means(self.p, self.yc, w)
        a2 = self.alpha**2
        phi1 = 1.0 + a2 * w**2 * tf
        # g / (u - c)^2 with g = u' - u'_c - kappa u' (u - c)
        gq = (p3 - (self.p.d2u(self.yc) / self.upc) * (d1 + p2) - self.kappa * w * d1 * p2) / q**2
        return -gq / self.upc - a2 * tf * (phi1 + 1) / (phi1**2 * q**2)

    def K(self, x):
        """K = -E(anchor) + int_anchor^y r."""
        x = np.asarray(x, dtype=float)
        prim = 0.5 * (C.chebval(2 * x - 1, self.cint) - self.cint_end)
        return -self.E_anchor + self.sigma * self.L * prim

    def evaluate(self, x):
        """All column quantities at reference points x (arrays of equal shape)."""
        x = np.asarray(x, dtype=float)
        w = self.w_of(x)
        a2 = self.alpha**2
        tf = self.tfac(x)
        dtf = C.chebval(2 * x - 1, self.dctf) * 2.0 / (self.sigma * self.L)
        phi1 = 1.0 + a2 * w**2 * tf
        dphi1 = a2 * (2 * w * tf + w**2 * dtf)
        q, d1, _, _ = segment_means(self.p, self.yc, w)
        up = self.upc + w * d1
        phi = w * q * phi1
        dphi = up * phi1 + w * q * dphi1
        K = self.K(x)
        r = self._r(x, tf)
        lnq = np.log(q)
        k = self.kappa / self.upc
        gs = -phi1 / self.upc - k * phi * lnq + phi * K
        lam = -k * phi
        dgs = -dphi1 / self.upc - k * phi1 * up + dphi * K + phi * r - k * dphi * lnq
        dlam = -k * dphi
        with np.errstate(divide="ignore"):
            lw = np.log(np.abs(w))
        gamma = np.where(w == 0, -1.0 / self.upc, gs + np.where(w == 0, 0.0, lam * lw))
        return {"phi1": phi1, "tfac": tf, "dphi1": dphi1, "phi": phi, "dphi": dphi,
                "gamma": gamma, "gs": gs, "lam": lam, "dgs": dgs, "dlam": dlam,
                "q": q}

    def limits(self):
        """One-sided values at y -> y_c of gs and dgs (lam and dlam vanish or are finite)."""
        K0 = float(self.K(0.0))
        k = self.kappa
        gs = -1.0 / self.upc
        dgs = -k + self.upc * K0 - k * np.log(self.upc)
        return {"gs": gs, "lam": 0.0, "dgs": dgs, "dlam": -k,
                "gamma": gs, "phi1": 1.0, "tfac": float(self.tfac(0.0)),
                "dphi1": 0.0, "phi": 0.0, "dphi": self.upc, "q": self.upc}

    def integrate(self, values):
        """int over this side in y of a function given at the Chebyshev nodes."""
        return self.L * (self.tools["wq"] @ values)


def default_order(alpha):
    return 32 + 2 * int(np.ceil(abs(alpha)))


def solve_side(p, alpha, yc, L, sigma, m=None, tol=1e-14, max_terms=None):
    """Neumann series for phi1 on one side; returns a Side."""
    m = m or default_order(alpha)
    tools = cheb_tools(m)
    x, t, gt = tools["x"], tools["t"], tools["gt"]
    w = sigma * L * x
    q = segment_means(p, yc, w)[0]
    qt = segment_means(p, yc, t[None, :] * w[:, None])[0]
    H = np.einsum("ik,ikm->im", gt * t**2 * (qt / q[:, None]) ** 2, tools["E"])
    top = tools["S"] @ H
    a2w2 = alpha**2 * w**2
    max_terms = max_terms or 4 * (int(abs(alpha)) + 10)
    psum = np.ones(m)
    for k in range(1, max_terms + 1):
        tf = top @ psum
        new = 1.0 + a2w2 * tf
        done = np.max(np.abs(new - psum)) <= tol * np.max(np.abs(new))
        psum = new
        if done:
            break
    else:
        raise NoConvergence(f"Neumann series not converged after {max_terms} terms")
    return Side(p, float(alpha), float(yc), float(L), sigma, top @ psum, k)


@dataclass
class Column:
    """Both sides of one critical layer c = u(y_c)."""

    c: float
    yc: float
    left: Side | None
    right: Side | None

    @property
    def sides(self):
        return [s for s in (self.left, self.right) if s is not None]

    def side_for(self, w):
        return self.right if w >= 0 else self.left

    def at(self, y):
        """Column quantities at points y; the diagonal holds the one-sided limit."""
        y = np.asarray(y, dtype=float)
        w = y - self.yc
        out = None
        for side, mask in ((self.left, w < 0), (self.right, w > 0)):
            if side is None or not mask.any():
                continue
            vals = side.evaluate(np.abs(w[mask]) / side.L)
            if out is None:
                out = {k: np.full(y.shape, np.nan) for k in vals}
            for k, v in vals.items():
                out[k][mask] = v
        diag = w == 0
        if diag.any():
            lim = (self.right or self.left).limits()
            if out is None:
                out = {k: np.full(y.shape, np.nan) for k in lim}
            for k in out:
                out[k][diag] = lim[k]
        return out

    def phi1(self, y):
        return self.at(y)["phi1"]


def solve_column(p, alpha, c, m=None, tol=1e-14, max_terms=None):
    yc = float(p.inverse(c))
    left = solve_side(p, alpha, yc, yc, -1, m, tol, max_terms) if yc > 0 else None
    right = solve_side(p, alpha, yc, 1 - yc, 1, m, tol, max_terms) if yc < 1 else None
    return Column(float(c), yc, left, right)


def solve_phi1(p, alpha, c, y, tol=1e-14, max_terms=None):
    """phi1 and tfac at points y, plus the number of series terms used."""
    col = solve_column(p, alpha, c, tol=tol, max_terms=max_terms)
    vals = col.at(y)
    terms = max(s.terms for s in col.sides)
    return vals["phi1"], vals["tfac"], terms


def phi(p, alpha, c, y):
    col = solve_column(p, alpha, c)
    return col.at(y)["phi"]


def gamma(p, alpha, c, y):
    """(Gamma_0 on y <= y_c, Gamma_1 on y >= y_c); entries of the other branch are NaN."""
    col = solve_column(p, alpha, c)
    y = np.asarray(y, dtype=float)
    g = col.at(y)["gamma"]
    g0 = np.where(y <= col.yc, g, np.nan)
    g1 = np.where(y >= col.yc, g, np.nan)
    if col.left is None:
        g0 = np.full_like(g, np.nan)
    if col.right is None:
        g1 = np.full_like(g, np.nan)
    return g0, g1


def shoot_phi(p, alpha, c, y, delta=1e-4, rtol=1e-13):
    """Independent check: integrate phi'' = alpha^2 phi + u'' phi/(u - c) outward from y_c.

    The first step off the layer uses the cubic Taylor polynomial of phi.
    Returns phi at points y.
    """
    yc = float(p.inverse(c))
    up, upp, uppp = float(p.du(yc)), float(p.d2u(yc)), float(p.d3u(yc))
    a2 = alpha**2
    d3 = a2 * up + uppp

    def rhs(yy, z):
        w = yy - yc
        q = segment_means(p, yc, np.array([w]))[0][0]
        return [z[1], a2 * z[0] + float(p.d2u(yy)) * z[0] / (w * q)]

    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for sgn in (-1.0, 1.0):
        mask = (y - yc) * sgn > delta
        end = 1.0 if sgn > 0 else 0.0
        if not mask.any():
            continue
        d = sgn * delta
        z0 = [up * d + 0.5 * upp * d**2 + d3 * d**3 / 6, up + upp * d + 0.5 * d3 * d**2]
        sol = solve_ivp(rhs, (yc + d, end), z0, method="DOP853", rtol=rtol,
                        atol=1e-16, dense_output=True)
        out[mask] = sol.sol(y[mask])[0]
    near = np.abs(y - yc) <= delta
    d = y[near] - yc
    out[near] = up * d + 0.5 * upp * d**2 + d3 * d**3 / 6
    return out


_FIELD_KEYS = ("phi1", "tfac", "gamma", "gs", "lam", "dgs", "dlam")


@dataclass
class RayleighField:
    """Column solutions on the tensor grid y_j x c_k with c_k = u(y_k).

    Every quantity is stored twice: `plus[key][j, k]` holds the branch
    y_j >= y_{c_k} (anchor 1) and `minus[key][j, k]` the branch y_j <= y_{c_k}
    (anchor 0); the diagonal carries the matching one-sided limit and the
    other triangle is NaN.
    """

    alpha: float
    profile_key: str
    ygrid: Grid
    cgrid: Grid
    plus: dict
    minus: dict
    cheb: np.ndarray
    terms: np.ndarray

    @property
    def phi1(self):
        return np.where(np.isnan(self.plus["phi1"]), self.minus["phi1"], self.plus["phi1"])

    @property
    def tfac(self):
        return np.where(np.isnan(self.plus["tfac"]), self.minus["tfac"], self.plus["tfac"])

    @property
    def gamma0(self):
        return self.minus["gamma"]

    @property
    def gamma1(self):
        return self.plus["gamma"]

    def column(self, p, k):
        """Rebuild the Column object of c-node k from the stored Chebyshev data."""
        yc = float(self.ygrid.nodes[k])
        left = right = None
        if yc > 0:
            left = Side(p, self.alpha, yc, yc, -1, self.cheb[k, 0], int(self.terms[k]))
        if yc < 1:
            right = Side(p, self.alpha, yc, 1 - yc, 1, self.cheb[k, 1], int(self.terms[k]))
        return Column(float(self.cgrid.nodes[k]), yc, left, right)

    def dump(self, path):
        n = self.ygrid.nodes.size
        header = {"alpha": self.alpha, "profile": self.profile_key, "n": n,
                  "m": int(self.cheb.shape[2]), "keys": list(_FIELD_KEYS)}
        with open(path, "wb") as fh:
            fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
            for d in (self.plus, self.minus):
                for k in _FIELD_KEYS:
                    fh.write(np.ascontiguousarray(d[k], dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.cheb, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.terms, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, p):
        with open(path, "rb") as fh:
            header = json.loads(fh.readline())
            if header["profile"] != p.key:
                raise ValueError("field was built for a different profile")
            n, m = header["n"], header["m"]
            raw = np.frombuffer(fh.read(), dtype="<f8")
        size = n * n
        blocks = [raw[i * size:(i + 1) * size].reshape(n, n) for i in range(2 * len(_FIELD_KEYS))]
        plus = dict(zip(_FIELD_KEYS, blocks[: len(_FIELD_KEYS)]))
        minus = dict(zip(_FIELD_KEYS, blocks[len(_FIELD_KEYS):]))
        off = 2 * len(_FIELD_KEYS) * size
        cheb = raw[off:off + n * 2 * m].reshape(n, 2, m)
        terms = raw[off + n * 2 * m:].astype(int)
        ygrid = uniform_grid(n)
        return cls(header["alpha"], p.key, ygrid, image_grid(p, ygrid), plus, minus, cheb, terms)


def build_field(p, alpha, ny, m=None, tol=1e-14) -> RayleighField:
    """Solve every c-column of the image grid and sample it on the y-grid."""
    ygrid = uniform_grid(ny)
    cgrid = image_grid(p, ygrid)
    y = ygrid.nodes
    m = m or default_order(alpha)
    plus = {k: np.full((ny, ny), np.nan) for k in _FIELD_KEYS}
    minus = {k: np.full((ny, ny), np.nan) for k in _FIELD_KEYS}
    cheb = np.zeros((ny, 2, m))
    terms = np.zeros(ny, dtype=int)
    for k in range(ny):
        yc = y[k]
        left = solve_side(p, alpha, yc, yc, -1, m, tol) if k > 0 else None
        right = solve_side(p, alpha, yc, 1 - yc, 1, m, tol) if k < ny - 1 else None
        terms[k] = max(s.terms for s in (left, right) if s is not None)
        for side, dest, sl, slot in ((left, minus, slice(0, k), 0),
                                     (right, plus, slice(k + 1, ny), 1)):
            if side is None:
                continue
            cheb[k, slot] = side.tf_nodes
            vals = side.evaluate(np.abs(y[sl] - yc) / side.L)
            lim = side.limits()
            for key in _FIELD_KEYS:
                dest[key][sl, k] = vals[key]
                dest[key][k, k] = lim[key]
        # anchors: Gamma vanishes exactly at its own wall
        for side, dest, row in ((left, minus, 0), (right, plus, ny - 1)):
            if side is not None and row != k:
                for key in ("gamma", "gs", "lam"):
                    dest[key][row, k] = 0.0
    # walls: the degenerate branch of the end columns is not produced
    for key in _FIELD_KEYS:
        minus[key][0, 0] = np.nan
        plus[key][ny - 1, ny - 1] = np.nan
    return RayleighField(float(alpha), p.key, ygrid, cgrid, plus, minus, cheb, terms)
