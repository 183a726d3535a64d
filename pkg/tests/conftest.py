import functools

import numpy as np
import pytest

from inviscid_damping.evolution import Representation, mu_for_mode, shape_mode
from inviscid_damping.profile import make_profile
from inviscid_damping.rayleigh import build_field
from inviscid_damping.spectrum import spectral_data

PROFILES = {
    "couette": ("couette", ()),
    "quadratic": ("quadratic", (0.2,)),
    "sinusoidal": ("sinusoidal-perturbed", (0.25,)),
}


@functools.lru_cache(maxsize=None)
def profile(name):
    kind, params = PROFILES[name]
    return make_profile(kind, params)


@functools.lru_cache(maxsize=None)
def field(name, alpha, ny=257):
    return build_field(profile(name), alpha, ny)


@functools.lru_cache(maxsize=None)
def spectral(name, alpha, ny=257):
    return spectral_data(profile(name), field(name, alpha, ny))


@functools.lru_cache(maxsize=None)
def representation(name, alpha, shape="sine", ny=257):
    p = profile(name)
    fld = field(name, alpha, ny)
    sd = spectral(name, alpha, ny)
    data = shape_mode(alpha, shape)
    return Representation(p, fld, sd, data, mu=mu_for_mode(p, fld, sd, data))


@pytest.fixture(scope="session")
def cache():
    """Shared builders for fields, spectral data and representations."""
    class Cache:
        pass

    c = Cache()
    c.profile, c.field, c.spectral, c.representation = profile, field, spectral, representation
    return c


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
