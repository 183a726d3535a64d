import numpy as np
import pytest

from inviscid_damping.errors import ContourThroughZero, NotApplicable, TooCloseToSpectrum
from inviscid_damping.profile import make_profile
from inviscid_damping.quadrature import pv_symmetric
from inviscid_damping.rayleigh import solve_column
from inviscid_damping.spectrum import (absorption_limit, alpha_max, alpha_max_checked, argument_change,
                                       column_ii3, compute_AB, compute_ii2, compute_ii3,
                                       embedding_scan, stadium, winding_number, wronskian)

COUETTE = make_profile("couette")
QUAD = make_profile("quadratic", [0.2])
SINE = make_profile("sinusoidal-perturbed", [0.25])

# p.v. int (u' - u'_c)/(u - c)^2 for u = y + 0.2 y^2 at c = 0.55, 30-digit mpmath
QUAD_II2_055 = -0.093023959026481678541


def couette_ii3(alpha, yc):
    return (-alpha / np.tanh(alpha * (1 - yc)) + 1 / (1 - yc)
            - alpha / np.tanh(alpha * yc) + 1 / yc)


def test_ii2_couette_zero():
    for c in (0.1, 0.5, 0.93):
        assert abs(compute_ii2(COUETTE, c)) < 1e-14


def test_ii2_quadratic_oracle():
    assert compute_ii2(QUAD, 0.55) == pytest.approx(QUAD_II2_055, abs=1e-14)
    yc = 0.5
    g = lambda y: (QUAD.du(y) - QUAD.du(yc)) / (QUAD.u(y) - 0.55) ** 2  # noqa: E731
    assert compute_ii2(QUAD, 0.55) == pytest.approx(pv_symmetric(g, yc, 0.0, 1.0), abs=1e-7)


def test_ii2_continuous():
    c = np.linspace(QUAD.u0, QUAD.u1, 402)[1:-1]
    v = np.array([compute_ii2(QUAD, ci) for ci in c])
    # strip the logarithmic endpoint singularity, then look for jumps
    yc = QUAD.inverse(c)
    kappa = QUAD.d2u(yc) / QUAD.du(yc) ** 2
    smooth = v - kappa * np.log((QUAD.u1 - c) / (c - QUAD.u0))
    h = c[1] - c[0]
    assert np.max(np.abs(np.diff(smooth, 2))) < 10 * h**2


@pytest.mark.parametrize("alpha", [1, 2, 8])
def test_ii3_couette_closed_form(alpha):
    for c in (0.05, 0.5, 0.81):
        assert compute_ii3(COUETTE, alpha, None, c) == pytest.approx(couette_ii3(alpha, c), rel=1e-12)


def test_ii3_sign_and_scaling():
    for p in (QUAD, SINE):
        for c in p.u0 + p.span * np.array([0.1, 0.5, 0.9]):
            v = [column_ii3(solve_column(p, a, c)) for a in (1, 2, 4, 8, 16)]
            assert all(x < 0 for x in v)
            assert abs(v[-2]) > abs(v[0])
            ratio = np.abs(v) / np.array([1, 2, 4, 8, 16])
            assert ratio.max() / ratio.min() < 20


def test_AB_couette(cache):
    sd = cache.spectral("couette", 1)
    c = sd.cgrid.nodes
    inner = slice(1, -1)
    yc = c[inner]
    ref = -sd.rho[inner] * np.sinh(1.0) / (np.sinh(yc) * np.sinh(1 - yc))
    assert np.max(np.abs(sd.A[inner] - ref)) <= 1e-12
    assert np.all(sd.B == 0)
    assert np.all(sd.A <= -1 + 1e-15)
    assert sd.A[0] == sd.A[-1] == -1.0


def test_AB_quadratic(cache):
    sd = cache.spectral("quadratic", 1)
    p = cache.profile("quadratic")
    yc = p.inverse(sd.cgrid.nodes)
    assert np.allclose(sd.B, np.pi * sd.rho * 0.4 / p.du(yc) ** 2, rtol=1e-15, atol=0)
    assert np.all(sd.B[1:-1] > 0)
    assert sd.A[0] == sd.A[-1] == p.u0 - p.u1
    assert np.all(sd.rho >= 0) and sd.rho[0] == 0 and sd.rho[-1] == 0
    assert np.all(sd.ii3[1:-1] <= 0)


def test_compute_AB_endpoints():
    A, B = compute_AB(QUAD, np.array([QUAD.u0, QUAD.u1]), np.array([np.nan, np.nan]),
                      np.array([np.inf, np.inf]))
    assert np.all(A == QUAD.u0 - QUAD.u1) and np.all(B == 0)


def test_embedding_scan(cache):
    for name in ("couette", "quadratic"):
        assert not embedding_scan(cache.spectral(name, 1), 1e-6).any()
    sd = cache.spectral("quadratic", 1)
    A, B = sd.A.copy(), sd.B.copy()
    sd2 = type(sd)(sd.alpha, sd.cgrid, sd.rho, sd.ii2, sd.ii3, A, B)
    sd2.A[77] = sd2.B[77] = 0.0
    flags = embedding_scan(sd2, 1e-6)
    assert flags[77] and flags.sum() == 1


def test_alpha_max():
    with pytest.raises(NotApplicable):
        alpha_max(COUETTE)
    assert alpha_max(QUAD)[0] is None
    value, info = alpha_max_checked(SINE)
    assert value is None and info["stable"]
    assert min(info["lambda_min"]) > 0
    value, info = alpha_max_checked(make_profile("sinusoidal-perturbed", [0.7]))
    assert info["stable"] and value == pytest.approx(8.08, abs=0.01)


def test_alpha_max_consistent_with_embedding_scan():
    p = make_profile("sinusoidal-perturbed", [0.7])
    from inviscid_damping.rayleigh import build_field
    from inviscid_damping.spectrum import default_embedding_tol, spectral_data
    am, _ = alpha_max_checked(p)
    alpha = int(np.floor(np.sqrt(am))) + 1
    sd = spectral_data(p, build_field(p, alpha, 129))
    assert not embedding_scan(sd, default_embedding_tol(p))[1:-1].any()


def test_wronskian():
    for a in (1, 2):
        for c in (2.0 + 0.5j, -1j, 0.5 + 0.1j):
            assert wronskian(COUETTE, a, c) == pytest.approx(np.sinh(a) / a, rel=1e-9)
        for p in (QUAD, SINE):
            for c in (1e6, 1e6j, -1e6 + 1e6j):
                assert wronskian(p, a, c) == pytest.approx(np.sinh(a) / a, rel=1e-4)
    w = wronskian(QUAD, 1, 0.5 + 0.3j)
    assert wronskian(QUAD, 1, 0.5 - 0.3j) == pytest.approx(np.conj(w), rel=1e-12)
    with pytest.raises(TooCloseToSpectrum):
        wronskian(QUAD, 1, 0.5 + 1e-9j)
    arr = wronskian(QUAD, 1, np.array([2.0, 3.0j]))
    assert arr.shape == (2,)


def test_argument_principle_self_test():
    assert winding_number(QUAD, 1, fn=lambda c: c - 2.0) == 1
    assert winding_number(QUAD, 1, fn=lambda c: (c - 2.0) * (c + 1.5j)) == 2
    assert winding_number(QUAD, 1, fn=lambda c: c - 0.6) == 0
    path = 0.7 * np.exp(2j * np.pi * np.arange(64) / 64)
    assert argument_change(path) == pytest.approx(2 * np.pi)
    assert argument_change(stadium(QUAD, 0.1, 400) - 0.6) == pytest.approx(2 * np.pi)
    with pytest.raises(ContourThroughZero):
        winding_number(QUAD, 1, R=4.0, fn=lambda c: c - 4.0)


@pytest.mark.parametrize("name", ["couette", "quadratic", "sinusoidal"])
def test_winding_zero(cache, name):
    p = cache.profile(name)
    for a in (1, 2):
        assert winding_number(p, a) == 0
    assert winding_number(p, 1, R=8.0, eps1=0.025) == 0


def test_limiting_absorption_single_node(cache):
    p = cache.profile("quadratic")
    sd = cache.spectral("quadratic", 2)
    k = 90
    c = sd.cgrid.nodes[k]
    lim, vals = absorption_limit(p, 2, c)
    target = (sd.A[k] - 1j * sd.B[k]) / p.du(p.inverse(c))
    assert abs(lim - target) <= 1e-3 * abs(target)
    assert abs(vals[0] - target) > abs(lim - target)
