"""Linear inviscid damping for monotone shear flows in a channel.

Rayleigh solutions on the continuous spectrum, spectral criteria, the
continuous-spectrum representation of a Fourier mode, and a reference
time stepper to check it against.
"""

__version__ = "0.1.0"

from .errors import DampingError  # noqa: E402,F401
from .profile import ShearProfile, inverse, inflection_points, make_profile  # noqa: E402,F401

__all__ = ["DampingError", "ShearProfile", "inverse", "inflection_points", "make_profile"]
