import numpy as np
import pytest
from scipy.integrate import quad

from inviscid_damping.errors import NoConvergence
from inviscid_damping.profile import make_profile
from inviscid_damping.rayleigh import (RayleighField, apply_T, gamma, phi, shoot_phi,
                                       solve_column, solve_phi1)

COUETTE = make_profile("couette")
QUAD = make_profile("quadratic", [0.2])
SINE = make_profile("sinusoidal-perturbed", [0.25])
PROFILES = [COUETTE, QUAD, SINE]
Y = np.linspace(0.0, 1.0, 201)


def sinhc(x):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def couette_gamma(alpha, yc, y):
    w = y - yc
    g0 = -np.cosh(alpha * w) - np.sinh(alpha * w) / np.tanh(alpha * yc)
    g1 = -np.cosh(alpha * w) + np.sinh(alpha * w) / np.tanh(alpha * (1 - yc))
    return g0, g1


@pytest.mark.parametrize("alpha", [1, 2, 4, 8])
@pytest.mark.parametrize("c", [0.0, 0.13, 0.5, 0.77, 1.0])
def test_couette_phi1_closed_form(alpha, c):
    p1, _, _ = solve_phi1(COUETTE, alpha, c, Y)
    ref = sinhc(alpha * (Y - c))
    assert np.max(np.abs(p1 / ref - 1)) <= 1e-12


@pytest.mark.parametrize("alpha", [1, 2, 4, 8])
def test_couette_phi_and_gamma(alpha):
    for c in (0.21, 0.5, 0.9):
        assert np.max(np.abs(phi(COUETTE, alpha, c, Y) - np.sinh(alpha * (Y - c)) / alpha)) <= 1e-12
        g0, g1 = gamma(COUETTE, alpha, c, Y)
        r0, r1 = couette_gamma(alpha, c, Y)
        left, right = Y <= c, Y >= c
        scale = np.max(np.abs(r1[right])) + np.max(np.abs(r0[left]))
        assert np.max(np.abs(g0[left] - r0[left])) <= 1e-12 * scale
        assert np.max(np.abs(g1[right] - r1[right])) <= 1e-12 * scale
        assert np.all(np.isnan(g0[~left])) and np.all(np.isnan(g1[~right]))


@pytest.mark.parametrize("p", PROFILES, ids=lambda p: p.kind)
@pytest.mark.parametrize("alpha", [1, 3, 8])
def test_phi1_invariants(p, alpha):
    for c in np.linspace(p.u0, p.u1, 7):
        col = solve_column(p, alpha, c)
        v = col.at(Y)
        w = Y - col.yc
        assert np.min(v["phi1"]) >= 1 - 1e-12
        assert np.all(v["phi1"][w == 0] == 1.0)
        order = np.argsort(np.abs(w))
        for side in (w >= 0, w <= 0):
            seq = v["phi1"][order][side[order]]
            assert np.all(np.diff(seq) >= -1e-13)
        rel = np.abs(v["phi1"] - 1 - alpha**2 * w**2 * v["tfac"]) / v["phi1"]
        assert np.max(rel) <= 1e-10
        assert np.all(np.sign(v["phi"]) == np.sign(w))


@pytest.mark.parametrize("p", PROFILES, ids=lambda p: p.kind)
@pytest.mark.parametrize("alpha", [1, 4])
def test_fixed_point_residual(p, alpha):
    for c in p.u0 + p.span * np.array([0.0, 0.3, 0.61, 1.0]):
        col = solve_column(p, alpha, c)
        y = np.linspace(0.0, 1.0, 41)
        phi1 = col.phi1(y)
        tphi = apply_T(p, c, col.phi1, y)
        assert np.max(np.abs(phi1 - 1 - alpha**2 * tphi)) <= 1e-10 * np.max(phi1)


def test_apply_T_examples():
    y = np.linspace(0.0, 1.0, 33)
    one = lambda z: np.ones_like(z)  # noqa: E731
    assert np.allclose(apply_T(COUETTE, 0.4, one, y), (y - 0.4) ** 2 / 6, rtol=0, atol=1e-15)
    assert np.all(apply_T(QUAD, 0.4, lambda z: np.zeros_like(z), y) == 0)
    for p in (QUAD, SINE):
        for c in np.linspace(p.u0, p.u1, 5):
            yc = p.inverse(c)
            t1 = apply_T(p, c, one, y)
            assert np.all(np.abs(t1) <= 0.5 * (y - yc) ** 2 + 1e-15)


def test_apply_T_nested_quadrature():
    # direct double integral of the defining formula, away from y_c
    c, yc = 0.55, 0.5
    f = np.cos
    u = QUAD.u
    for y in (0.1, 0.93):
        inner = lambda yp: quad(lambda z: f(z) * (u(z) - c) ** 2, yc, yp, epsabs=1e-15)[0]  # noqa: E731
        ref = quad(lambda yp: inner(yp) / (u(yp) - c) ** 2, yc, y, epsabs=1e-15)[0]
        assert apply_T(QUAD, c, f, np.array([y]))[0] == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("alpha", [1, 2, 4, 8, 16])
def test_terms_bound(alpha):
    for p in PROFILES:
        _, _, terms = solve_phi1(p, alpha, p.u0 + 0.37 * p.span, Y)
        assert terms <= alpha * np.e + 20


def test_no_convergence():
    with pytest.raises(NoConvergence):
        solve_phi1(QUAD, 8, 0.0, Y, max_terms=3)


@pytest.mark.parametrize("p", [QUAD, SINE], ids=lambda p: p.kind)
@pytest.mark.parametrize("alpha", [1, 2, 4])
def test_shooting_agreement(p, alpha):
    for c in p.u0 + p.span * np.array([0.17, 0.5, 0.83]):
        col = solve_column(p, alpha, c)
        y = Y[np.abs(Y - col.yc) > 0.02]
        ph = col.at(y)["phi"]
        sh = shoot_phi(p, alpha, c, y)
        assert np.max(np.abs(sh / ph - 1)) <= 1e-8


@pytest.mark.parametrize("p", [QUAD, SINE], ids=lambda p: p.kind)
def test_ode_residual(p):
    alpha = 2
    c = p.u0 + 0.4 * p.span
    h = 1e-3
    y = np.linspace(0.05, 0.95, 19)
    y = y[np.abs(y - p.inverse(c)) > 0.05]
    st = np.array([-2, -1, 0, 1, 2]) * h
    vals = phi(p, alpha, c, (y[:, None] + st).ravel()).reshape(y.size, 5)
    d2 = vals @ np.array([-1, 16, -30, 16, -1]) / (12 * h**2)
    f = vals[:, 2]
    res = (p.u(y) - c) * (d2 - alpha**2 * f) - p.d2u(y) * f
    scale = np.abs((p.u(y) - c) * d2) + np.abs(alpha**2 * (p.u(y) - c) * f) + np.abs(p.d2u(y) * f)
    assert np.max(np.abs(res) / scale) <= 1e-6


@pytest.mark.parametrize("p", PROFILES, ids=lambda p: p.kind)
def test_ratio_envelope_and_remainder(p):
    worst_ratio, worst_rem = 1.0, 0.0
    for alpha in (1, 2, 4, 8):
        for c in np.linspace(p.u0, p.u1, 9):
            v = solve_column(p, alpha, c).at(Y)
            w = Y - p.inverse(c)
            r = v["phi1"] / sinhc(alpha * w)
            worst_ratio = max(worst_ratio, np.max(r), np.max(1 / r))
            worst_rem = max(worst_rem, np.max(v["tfac"] / v["phi1"]))
    assert worst_ratio <= 50
    assert worst_rem <= 10


@pytest.mark.parametrize("p", [QUAD, SINE], ids=lambda p: p.kind)
def test_gamma_against_definition(p):
    alpha = 2
    c = p.u0 + 0.45 * p.span
    col = solve_column(p, alpha, c)
    yc = col.yc
    f = lambda z: col.at(np.array([z]))["phi"][0] ** -2  # noqa: E731
    for y in (0.1, 0.3, 0.7, 0.95):
        anchor = 0.0 if y < yc else 1.0
        ref = col.at(np.array([y]))["phi"][0] * quad(f, anchor, y, epsabs=1e-13, epsrel=1e-13)[0]
        assert col.at(np.array([y]))["gamma"][0] == pytest.approx(ref, rel=1e-10)


def test_gamma_anchors_and_diagonal():
    for p in PROFILES:
        c = p.u0 + 0.3 * p.span
        col = solve_column(p, 3, c)
        g0, g1 = gamma(p, 3, c, np.array([0.0, col.yc, 1.0]))
        assert abs(g0[0]) < 1e-14 and abs(g1[2]) < 1e-14
        assert g0[1] == g1[1] == pytest.approx(-1 / p.du(col.yc), rel=1e-15)


def test_gamma_derivative_matches_differences():
    p = SINE
    col = solve_column(p, 2, 0.4)
    y = np.array([0.1, 0.3, 0.6, 0.8])
    h = 1e-5
    d = (col.at(y + h)["gamma"] - col.at(y - h)["gamma"]) / (2 * h)
    v = col.at(y)
    w = y - col.yc
    dg = v["dgs"] + v["dlam"] * np.log(np.abs(w))
    assert np.max(np.abs(d - dg)) <= 1e-7


@pytest.mark.parametrize("p", [QUAD, SINE], ids=lambda p: p.kind)
def test_gamma_near_diagonal(p):
    # Gamma(y_c + s h) - Gamma(y_c) = b h ln h + a h + o(h): fit and check b against -u''_c/u'_c
    c = p.u0 + 0.43 * p.span
    col = solve_column(p, 1, c)
    yc = col.yc
    h = 2.0 ** -np.arange(6, 13)
    for s in (1, -1):
        g = col.at(yc + s * h)["gamma"]
        lim = -1 / p.du(yc)
        M = np.stack([h * np.log(h), h, h**2 * np.log(h), h**2], axis=1)
        coef = np.linalg.lstsq(M, (g - lim) * 1.0, rcond=None)[0]
        b = coef[0]
        assert np.isfinite(b)
        assert b == pytest.approx(-s * p.d2u(yc) / p.du(yc) ** 2, rel=1e-3)
        lim_side = col.at(np.array([yc]))["gamma"][0]
        assert lim_side == lim


def test_field_invariants(cache):
    for name in ("quadratic", "sinusoidal"):
        fld = cache.field(name, 2)
        phi1 = fld.phi1
        y = fld.ygrid.nodes
        w = y[:, None] - y[None, :]
        assert np.nanmin(phi1) >= 1 - 1e-12
        assert np.all(np.diag(phi1) == 1.0)
        rel = np.abs(phi1 - 1 - 4 * w**2 * fld.tfac) / phi1
        assert np.nanmax(rel) <= 1e-10
        assert np.nanmin(np.diff(fld.plus["phi1"], axis=0)) >= -1e-12
        assert np.nanmax(np.diff(fld.minus["phi1"], axis=0)) <= 1e-12
        assert np.all(fld.gamma0[0, 1:] == 0) and np.all(fld.gamma1[-1, :-1] == 0)
        assert np.all(np.isnan(fld.gamma0[np.tril_indices(y.size, -1)]))


def test_field_matches_column(cache):
    p = cache.profile("quadratic")
    fld = cache.field("quadratic", 1)
    k = 100
    col = solve_column(p, 1, fld.cgrid.nodes[k])
    y = fld.ygrid.nodes
    v = col.at(y)
    both = np.where(y >= y[k], fld.gamma1[:, k], fld.gamma0[:, k])
    assert np.max(np.abs(both[1:-1] - v["gamma"][1:-1])) <= 1e-14
    assert np.max(np.abs(fld.phi1[:, k] - v["phi1"])) <= 1e-14


def test_dump_load_roundtrip(tmp_path, cache):
    p = cache.profile("sinusoidal")
    fld = cache.field("sinusoidal", 1, 65)
    path = tmp_path / "field.bin"
    fld.dump(path)
    back = RayleighField.load(path, p)
    assert back.alpha == fld.alpha and back.profile_key == fld.profile_key
    for key in fld.plus:
        np.testing.assert_array_equal(back.plus[key], fld.plus[key])
        np.testing.assert_array_equal(back.minus[key], fld.minus[key])
    np.testing.assert_array_equal(back.cgrid.nodes, fld.cgrid.nodes)
    np.testing.assert_array_equal(back.terms, fld.terms)
    with pytest.raises(ValueError):
        RayleighField.load(path, cache.profile("quadratic"))
