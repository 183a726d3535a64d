"""One-dimensional quadrature: principal values, Filon panels, graded grids.

Also holds the split product rule used by the evolution module: a piecewise
polynomial interpolant on a uniform grid, integrated against a smooth weight
and against the same weight times ln|y_j - y'|, with the kink node y_j as a
panel break.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PoleAtEndpoint

GRID_KINDS = ("uniform", "image-of-y-grid", "graded-near-point")


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "uniform"

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.ndim != 1 or x.shape != w.shape or x.size < 2:
            raise ValueError("nodes and weights must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid nodes must increase strictly")
        if np.any(w <= 0):
            raise ValueError("grid weights must be positive")
        if self.kind not in GRID_KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @property
    def a(self):
        return float(self.nodes[0])

    @property
    def b(self):
        return float(self.nodes[-1])

    def __len__(self):
        return self.nodes.size

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))


def trapezoid_weights(x):
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    d = np.diff(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def uniform_grid(n, a=0.0, b=1.0) -> Grid:
    x = np.linspace(a, b, n)
    return Grid(x, trapezoid_weights(x), "uniform")


def image_grid(profile, ygrid: Grid) -> Grid:
    """c-grid c_k = u(y_k); every critical layer of a c-node is a y-node."""
    c = profile.u(ygrid.nodes)
    c[0], c[-1] = profile.u0, profile.u1
    return Grid(c, trapezoid_weights(c), "image-of-y-grid")


def graded_refine(grid: Grid, point: float, levels: int) -> Grid:
    """Insert `levels` dyadically shrinking panels on each side of `point`."""
    if levels <= 0:
        return grid
    x = grid.nodes
    if not x[0] <= point <= x[-1]:
        raise ValueError("point outside grid span")
    i = int(np.argmin(np.abs(x - point)))
    scale = np.max(np.abs(x)) + 1.0
    new = []
    if abs(x[i] - point) <= 1e-14 * scale:
        left = x[i] - x[i - 1] if i > 0 else 0.0
        right = x[i + 1] - x[i] if i < x.size - 1 else 0.0
        p = x[i]
    else:
        k = int(np.searchsorted(x, point)) - 1
        left, right, p = point - x[k], x[k + 1] - point, point
        new.append(point)
    k = 2.0 ** -np.arange(1, levels + 1)
    if left > 0:
        new.extend(p - left * k)
    if right > 0:
        new.extend(p + right * k)
    nodes = np.unique(np.concatenate([x, new]))
    return Grid(nodes, trapezoid_weights(nodes), "graded-near-point")


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_on_edges(edges, n=16):
    """Composite Gauss-Legendre rule on consecutive panels given by `edges`."""
    edges = np.asarray(edges, dtype=float)
    s, g = gauss_legendre(n)
    h = np.diff(edges)
    pts = edges[:-1, None] + h[:, None] * s
    wts = h[:, None] * g
    return pts.ravel(), wts.ravel()


def graded_edges(a, b, point, levels=30, base=16):
    """Panel edges on [a, b]: `base` uniform panels plus dyadic grading at `point`."""
    edges = np.linspace(a, b, base + 1)
    # a base edge a few ulps from the point would leave a degenerate panel
    edges = list(edges[np.abs(edges - point) > 1e-12 * (b - a)])
    edges.extend(x for x in (a, b) if x not in edges)
    if a < point < b:
        edges.append(point)
    for side in (a, b):
        d = side - point
        if d != 0:
            edges.extend(point + d * 2.0 ** -np.arange(1, levels + 1))
    return np.unique(np.asarray(edges))


def pv_integral(f, c, profile, pole_coeff=0.0, n=12, levels=30):
    """Principal value of  int_0^1 f(y) dy  for f with a simple pole at y_c = u^{-1}(c).

    The caller supplies `pole_coeff` so that f(y) - pole_coeff u'(y)/(u(y)-c)
    is bounded.  The subtracted term integrates in closed form to
    pole_coeff * ln((u(1)-c)/(c-u(0))) after the change of variable z = u(y).
    """
    u0, u1 = profile.u0, profile.u1
    span = u1 - u0
    if pole_coeff == 0.0 and not (u0 < c < u1):
        yc = None
    else:
        if abs(c - u0) < 1e-10 * max(1.0, span) or abs(u1 - c) < 1e-10 * max(1.0, span):
            raise PoleAtEndpoint(f"pole at c={c} touches the interval end")
        yc = profile.inverse(c)
    if yc is None:
        y, w = gauss_on_edges(np.linspace(0.0, 1.0, 33), n)
        return np.sum(w * f(y))
    y, w = gauss_on_edges(graded_edges(0.0, 1.0, yc, levels), n)
    rem = f(y) - pole_coeff * profile.du(y) / (profile.u(y) - c)
    return np.sum(w * rem) + pole_coeff * np.log((u1 - c) / (c - u0))


def hilbert(f, c, a, b, n=16, levels=30):
    """H(f 1_[a,b])(c) = p.v. int_a^b f(z) / (c - z) dz  for a < c < b."""
    z, w = gauss_on_edges(graded_edges(a, b, c, levels), n)
    fc = f(np.asarray(c, dtype=float))
    return np.sum(w * (f(z) - fc) / (c - z)) + fc * np.log((c - a) / (b - c))


def richardson_odd(eps, values):
    """Extrapolate values(eps) = L + b1 eps + b3 eps^3 (+ ...) to eps = 0."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values)
    e = eps / eps.max()
    cols = [np.ones_like(e), e, e**3, e**5][: eps.size]
    coef = np.linalg.lstsq(np.stack(cols, axis=1), values, rcond=None)[0]
    return coef[0]


def pv_symmetric(g, x0, a, b, eps_list=(1e-2, 5e-3, 2.5e-3, 1.25e-3), n=16):
    """Brute-force p.v. of int_a^b g: symmetric exclusion |x - x0| > eps, eps -> 0.

    Each truncated integral uses panels geometric in the distance to x0;
    the eps-limit is taken by odd-power Richardson extrapolation.
    """
    vals = []
    for eps in eps_list:
        total = 0.0
        for lo, hi, sgn in ((x0 + eps, b, 1.0), (a, x0 - eps, -1.0)):
            if hi <= lo:
                continue
            dist = np.geomspace(eps, abs(b - x0) if sgn > 0 else abs(x0 - a), 60)
            edges = np.unique(x0 + sgn * dist)
            pts, wts = gauss_on_edges(edges, n)
            total = total + np.sum(wts * g(pts))
        vals.append(total)
    return richardson_odd(eps_list, vals)


def sing2_identity_check(f, c, a=0.0, b=1.0, eps_list=(1e-2, 1e-3, 1e-4, 1e-5)):
    """Both sides of the p.v. identity for the doubly singular kernel.

        lhs = p.v. int_a^b (int_c^{c'} f) / (c - c')^2 dc'
        rhs = -H(f 1_[a,b])(c) + (c-a)^{-1} int_a^c f - (b-c)^{-1} int_c^b f

    The left side is computed from symmetric exclusion and the eps-limit,
    the right side from the Hilbert transform with pole subtraction.
    """
    s, g = gauss_legendre(24)

    def antider(cp):
        cp = np.asarray(cp, dtype=float)
        pts = c + (cp - c)[..., None] * s
        return (cp - c) * np.sum(f(pts) * g, axis=-1)

    lhs = pv_symmetric(lambda cp: antider(cp) / (cp - c) ** 2, c, a, b, eps_list)
    left = antider(np.asarray(a))
    right = antider(np.asarray(b))
    # int_a^c f = -antider(a), int_c^b f = antider(b)
    rhs = -hilbert(f, c, a, b) + (-left) / (c - a) - right / (b - c)
    return float(lhs), float(rhs)


_SERIES_TERMS = 30


def _filon_moments(theta):
    """E1 = int_0^1 e^{-i theta s} ds and E2 = int_0^1 s e^{-i theta s} ds."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1.0
    ts = np.where(small, theta, 0.0)
    e1s = np.zeros(theta.shape, dtype=complex)
    e2s = np.zeros(theta.shape, dtype=complex)
    term = np.ones(theta.shape, dtype=complex)
    for k in range(_SERIES_TERMS):
        e1s += term / (k + 1)
        e2s += term / (k + 2)
        term = term * (-1j * ts) / (k + 1)
    tl = np.where(small, 1.0, theta)
    ex = np.exp(-1j * tl)
    e1l = (1.0 - ex) / (1j * tl)
    e2l = ex * (1j / tl + 1.0 / tl**2) - 1.0 / tl**2
    return np.where(small, e1s, e1l), np.where(small, e2s, e2l)


def oscillatory_integral(g, nodes, freq):
    """Filon rule for int g(c) e^{-i freq c} dc over the span of `nodes`.

    g is linearly interpolated on every panel and each panel integral is taken
    in closed form; power series replace the closed forms for small
    freq * panel, so the rule is uniform in freq.  g may carry extra trailing
    axes.
    """
    x = np.asarray(nodes, dtype=float)
    g = np.asarray(g)
    h = np.diff(x)
    e1, e2 = _filon_moments(freq * h)
    phase = np.exp(-1j * freq * x[:-1]) * h
    w_left = phase * (e1 - e2)
    w_right = phase * e2
    shape = (-1,) + (1,) * (g.ndim - 1)
    return np.sum(w_left.reshape(shape) * g[:-1] + w_right.reshape(shape) * g[1:], axis=0)


def lagrange_basis(xnodes, x):
    """Values of the Lagrange basis on `xnodes` at points `x`, shape (len(x), len(xnodes))."""
    xnodes = np.asarray(xnodes, dtype=float)
    x = np.asarray(x, dtype=float)
    m = xnodes.size
    out = np.ones((x.size, m))
    for i in range(m):
        for k in range(m):
            if k != i:
                out[:, i] *= (x - xnodes[k]) / (xnodes[i] - xnodes[k])
    return out


@dataclass(frozen=True)
class SplitRule:
    """Quadrature points for int_0^1 F(y') w(y') dy' with F known on a uniform grid.

    F is replaced by piecewise Lagrange interpolants of `degree` built outward
    from the break node y_j, so F may have a different smooth branch on each
    side.  `logdist` holds ln|y_j - y'| at the points; the panels touching y_j
    are graded dyadically so that log-weighted integrals stay accurate.
    """

    j: int
    pts: np.ndarray
    qw: np.ndarray
    idx: np.ndarray
    basis: np.ndarray
    logdist: np.ndarray
    right: np.ndarray

    def interpolate(self, left_values, right_values=None):
        """Interpolated F at the quadrature points.

        `left_values` feeds the interpolants left of y_j and `right_values`
        (default: the same array) those right of it, so F may jump at y_j.
        """
        lv = np.asarray(left_values)
        rv = lv if right_values is None else np.asarray(right_values)
        v = np.where(self.right[:, None], rv[self.idx], lv[self.idx])
        return np.einsum("pk,pk->p", self.basis, v)


def split_rule(n, j, degree=3, nq=16, levels=40) -> SplitRule:
    """Split product rule on the uniform grid of n nodes with break at node j."""
    h = 1.0 / (n - 1)
    pts, qw, idx, basis, logd, right = [], [], [], [], [], []
    s, g = gauss_legendre(nq)
    for sgn, avail in ((-1, j), (1, n - 1 - j)):
        if avail == 0:
            continue
        start = 0
        while start < avail:
            width = min(degree, avail - start)
            if width == degree or avail <= degree:
                nodes_off = np.arange(start, start + (degree if avail > degree else avail) + 1)
            else:
                nodes_off = np.arange(avail - degree, avail + 1)
            lo_off, hi_off = start, start + width
            if start == 0:
                edges = np.concatenate([[0.0], width * 2.0 ** -np.arange(levels, -1, -1)])
            else:
                edges = np.array([lo_off, hi_off], dtype=float)
            off = edges[:-1, None] + np.diff(edges)[:, None] * s
            w = (np.diff(edges)[:, None] * g).ravel() * h
            off = off.ravel()
            ref = lagrange_basis(nodes_off.astype(float), off)
            if nodes_off.size < degree + 1:
                pad = degree + 1 - nodes_off.size
                ref = np.hstack([ref, np.zeros((ref.shape[0], pad))])
                nodes_off = np.concatenate([nodes_off, np.zeros(pad, dtype=int)])
            pts.append(j * h + sgn * off * h)
            qw.append(w)
            idx.append(np.broadcast_to(j + sgn * nodes_off, ref.shape))
            basis.append(ref)
            logd.append(np.log(off * h))
            right.append(np.full(off.size, sgn > 0))
            start += width
    return SplitRule(j, np.concatenate(pts), np.concatenate(qw), np.concatenate(idx),
                     np.concatenate(basis), np.concatenate(logd), np.concatenate(right))
