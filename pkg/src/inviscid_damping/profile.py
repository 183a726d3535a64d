"""Monotone shear profiles u(y) on the channel [0, 1]."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq

from .errors import BadParams, NonMonotone, OutOfRange

KINDS = ("couette", "quadratic", "sinusoidal-perturbed", "user-table")

# returned by inflection_points when u'' vanishes on the whole channel
IDENTICALLY_ZERO = "identically-zero"

_DENSE = np.linspace(0.0, 1.0, 10001)
_MIN_TABLE_NODES = 64


@dataclass(frozen=True)
class ShearProfile:
    """A C^4 monotone background flow together with its first four derivatives.

    All callables accept scalars or arrays of y in [0, 1].
    """

    u: Callable
    du: Callable
    d2u: Callable
    d3u: Callable
    d4u: Callable
    c0: float
    kind: str
    params: tuple = ()
    key: str = field(default="", compare=False)

    @property
    def u0(self) -> float:
        return float(self.u(0.0))

    @property
    def u1(self) -> float:
        return float(self.u(1.0))

    @property
    def span(self) -> float:
        return self.u1 - self.u0

    def rho(self, c):
        """Boundary weight (c - u(0)) (u(1) - c)."""
        c = np.asarray(c)
        return (c - self.u0) * (self.u1 - c)

    def inverse(self, c):
        return inverse(self, c)

    def divided_difference(self, yc, w, n=20):
        """(u(yc + w) - u(yc)) / w evaluated without cancellation.

        Uses the mean value of u' over the segment, so the result is smooth in w
        and equals u'(yc) at w = 0.
        """
        s, g = _gauss01(n)
        yc = np.asarray(yc, dtype=float)
        w = np.asarray(w, dtype=float)
        pts = yc[..., None] + w[..., None] * s
        return np.sum(self.du(pts) * g, axis=-1)

    def d2_divided_difference(self, yc, w, n=20):
        """(u'(yc + w) - u'(yc)) / w, again through the segment mean of u''."""
        s, g = _gauss01(n)
        yc = np.asarray(yc, dtype=float)
        w = np.asarray(w, dtype=float)
        pts = yc[..., None] + w[..., None] * s
        return np.sum(self.d2u(pts) * g, axis=-1)


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _zero(y):
    return np.zeros_like(np.asarray(y, dtype=float))


def _key(kind, params, extra=b""):
    h = hashlib.sha256()
    h.update(kind.encode())
    h.update(np.asarray(params, dtype=float).tobytes())
    h.update(extra)
    return h.hexdigest()


def _certify(u, du, d2u, d3u, d4u, kind, params, key):
    dmin = float(np.min(du(_DENSE)))
    if not dmin > 0.0:
        raise NonMonotone(f"min u' = {dmin:.3e} <= 0 for {kind} {params}")
    prof = ShearProfile(u, du, d2u, d3u, d4u, 0.99 * dmin, kind, tuple(params), key)
    if not prof.u0 < prof.u1:
        raise NonMonotone("u(0) >= u(1)")
    return prof


def make_profile(kind: str, params=(), table=None) -> ShearProfile:
    """Build a registered profile.

    kinds and parameters:
      couette                 u = y                                   params: none
      quadratic               u = y + a y^2                           params: [a], a > -0.5
      sinusoidal-perturbed    u = y - b sin(2 pi y) / (2 pi)          params: [b], 0 <= b < 1
      user-table              quintic spline through (y, u) samples   table: (y, u) or path
    """
    params = tuple(float(p) for p in params)
    if not all(np.isfinite(params)):
        raise BadParams(f"non-finite parameters {params}")
    if kind == "couette":
        if params:
            raise BadParams("couette takes no parameters")
        one = lambda y: np.ones_like(np.asarray(y, dtype=float))  # noqa: E731
        return _certify(lambda y: np.asarray(y, dtype=float) * 1.0, one,
                        _zero, _zero, _zero, kind, params, _key(kind, params))
    if kind == "quadratic":
        if len(params) != 1:
            raise BadParams("quadratic takes exactly one parameter [a]")
        (a,) = params
        return _certify(
            lambda y: np.asarray(y, dtype=float) + a * np.asarray(y, dtype=float) ** 2,
            lambda y: 1.0 + 2.0 * a * np.asarray(y, dtype=float),
            lambda y: np.full_like(np.asarray(y, dtype=float), 2.0 * a),
            _zero, _zero, kind, params, _key(kind, params))
    if kind == "sinusoidal-perturbed":
        if len(params) != 1:
            raise BadParams("sinusoidal-perturbed takes exactly one parameter [b]")
        (b,) = params
        if b < 0:
            raise BadParams("amplitude must be non-negative")
        k = 2.0 * np.pi
        return _certify(
            lambda y: np.asarray(y, dtype=float) - b * np.sin(k * np.asarray(y, dtype=float)) / k,
            lambda y: 1.0 - b * np.cos(k * np.asarray(y, dtype=float)),
            lambda y: b * k * np.sin(k * np.asarray(y, dtype=float)),
            lambda y: b * k**2 * np.cos(k * np.asarray(y, dtype=float)),
            lambda y: -b * k**3 * np.sin(k * np.asarray(y, dtype=float)),
            kind, params, _key(kind, params))
    if kind == "user-table":
        return table_profile(table)
    raise BadParams(f"unknown profile kind {kind!r}; expected one of {KINDS}")


def table_profile(table) -> ShearProfile:
    """Quintic-spline profile from a two-column (y, u) table or a path to one."""
    if table is None:
        raise BadParams("user-table profile needs a table")
    if isinstance(table, (str, bytes)) or hasattr(table, "__fspath__"):
        data = np.loadtxt(table, ndmin=2)
        ys, us = data[:, 0], data[:, 1]
    else:
        ys, us = (np.asarray(a, dtype=float) for a in table)
    if ys.size < _MIN_TABLE_NODES:
        raise BadParams(f"table has {ys.size} nodes; at least {_MIN_TABLE_NODES} required")
    if np.any(np.diff(ys) <= 0) or abs(ys[0]) > 1e-12 or abs(ys[-1] - 1.0) > 1e-12:
        raise BadParams("table abscissae must increase strictly from 0 to 1")
    spl = make_interp_spline(ys, us, k=5)
    ders = [spl] + [spl.derivative(n) for n in range(1, 5)]

    def wrap(s):
        return lambda y: s(np.asarray(y, dtype=float))

    key = _key("user-table", (), ys.tobytes() + us.tobytes())
    return _certify(*(wrap(s) for s in ders), "user-table", (), key)


def inverse(p: ShearProfile, c, tol=1e-15, maxiter=100):
    """Critical layer y_c = u^{-1}(c) by guarded Newton with bisection fallback.

    Vectorised over c; raises OutOfRange when some c lies outside [u(0), u(1)]
    by more than 1e-12.
    """
    c = np.asarray(c, dtype=float)
    u0, u1 = p.u0, p.u1
    if np.any(c < u0 - 1e-12) or np.any(c > u1 + 1e-12):
        raise OutOfRange(f"c outside [{u0}, {u1}]")
    c = np.clip(c, u0, u1)
    lo = np.zeros_like(c)
    hi = np.ones_like(c)
    y = (c - u0) / (u1 - u0)
    scale = tol * (u1 - u0)
    for _ in range(maxiter):
        f = p.u(y) - c
        lo = np.where(f < 0, y, lo)
        hi = np.where(f > 0, y, hi)
        if np.all(np.abs(f) <= scale):
            break
        step = y - f / p.du(y)
        bad = (step <= lo) | (step >= hi) | ~np.isfinite(step)
        y = np.where(bad, 0.5 * (lo + hi), step)
    y = np.where(c == u0, 0.0, np.where(c == u1, 1.0, y))
    return y if y.ndim else float(y)


def inflection_points(p: ShearProfile, tol=1e-12, n=4097):
    """Zeros of u'' in [0, 1], or IDENTICALLY_ZERO when u'' vanishes everywhere."""
    ys = np.linspace(0.0, 1.0, n)
    d2 = p.d2u(ys)
    scale = float(np.max(np.abs(d2)))
    if scale == 0.0:
        return IDENTICALLY_ZERO
    small = np.abs(d2) <= 1e-12 * scale
    found = list(ys[small])
    sgn = np.sign(np.where(small, 0.0, d2))
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        found.append(brentq(lambda y: float(p.d2u(y)), ys[i], ys[i + 1], xtol=tol))
    found.sort()
    merged = []
    for y in found:
        if not merged or y - merged[-1] > 10 * tol + 1.0 / n:
            merged.append(float(y))
    return merged
