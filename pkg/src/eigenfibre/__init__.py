"""Numerical verification of minimal codimension-two fibres of complex eigenfunctions."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .manifolds import (  # noqa: E402,F401
    ManifoldPoint,
    ManifoldSpec,
    complex_projective,
    quaternionic_unitary,
    random_point,
    special_orthogonal,
    sphere,
    unitary,
)
