"""Numerical tension field, conformality operator and friends.

All operators are evaluated at a single point from an orthonormal frame
``X_1, ..., X_m`` and the geodesics ``gamma_i`` leaving the point along
``X_i``:

* the gradient coefficients are ``X_i(f) = d/dt f(gamma_i(t))`` at 0;
* the tension field is the trace of the Hessian,
  ``tau(f) = sum_i d^2/dt^2 f(gamma_i(t))`` at 0 (geodesics have no
  acceleration, so no connection terms appear);
* the conformality operator is the complex *bilinear* pairing
  ``kappa(f, g) = sum_i X_i(f) X_i(g)``, without conjugation.

Derivatives are central finite differences along real curves.  Complex-step
differentiation is not an option because the fields involve conjugates.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateInput, DegeneratePoint, InsufficientSamples, PhaseDependentField
from .manifolds import Kind, ManifoldPoint, ManifoldSpec, hopf_invariance_check, random_point
from .numerics import (
    FIRST_DERIVATIVE,
    SECOND_DERIVATIVE,
    Stencil,
    eig_sym2,
    gram_schmidt,
    make_rng,
    stencil_derivative,
)

GRAM_DET_MIN = 1e-14
DPHI_MIN = 1e-10
PHASE_TOL = 1e-12
OUTER_STEP = 1e-3
FIT_CUTOFF = 1e-6

__all__ = [
    "ScalarField",
    "EigenData",
    "FirstFundamentalData",
    "gradient",
    "gradient_vector",
    "real_jacobian",
    "tension",
    "conformality",
    "dphi_norm_sq",
    "p_tension",
    "first_fundamental_eigenvalues",
    "estimate_eigenpair",
    "product_rule_check",
    "coordinate_derivative_rules",
]


def _ambient(p) -> np.ndarray:
    return p.ambient if isinstance(p, ManifoldPoint) else np.asarray(p)


class ScalarField:
    """Complex-valued function on a manifold, evaluated on ambient arrays.

    Fields compose with ``+``, ``-``, ``*``, integer ``**`` and scalar
    division, and have :meth:`conj`, :meth:`real` and :meth:`imag`.  A field
    on complex projective space is checked for phase invariance when it is
    built directly (combinations of invariant fields are invariant, so they
    skip the check).
    """

    def __init__(self, spec: ManifoldSpec, func: Callable[[np.ndarray], complex], label: str = "f",
                 check_invariance: bool = True):
        self.spec = spec
        self._func = func
        self.label = label
        if check_invariance and spec.kind is Kind.CP:
            rng = make_rng(20240601)
            for _ in range(2):
                x = spec.random_array(rng)
                dev = hopf_invariance_check(self, x, 4, rng)
                if dev > PHASE_TOL * max(1.0, abs(self(x))):
                    raise PhaseDependentField(f"{label} changes by {dev:.2e} under a phase of the lift")

    def __call__(self, x) -> complex:
        return complex(self._func(_ambient(x)))

    def __repr__(self) -> str:
        return f"ScalarField({self.spec.name}: {self.label})"

    @classmethod
    def constant(cls, spec: ManifoldSpec, value: complex) -> "ScalarField":
        value = complex(value)
        return cls(spec, lambda x: value, label=repr(value), check_invariance=False)

    def _derived(self, func, label) -> "ScalarField":
        return ScalarField(self.spec, func, label, check_invariance=False)

    def _coerce(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            if other.spec != self.spec:
                raise ValueError(f"cannot combine fields on {self.spec.name} and {other.spec.name}")
            return other
        if isinstance(other, numbers.Number):
            return ScalarField.constant(self.spec, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        f, g = self._func, other._func
        return self._derived(lambda x: f(x) + g(x), f"({self.label} + {other.label})")

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        f, g = self._func, other._func
        return self._derived(lambda x: f(x) - g(x), f"({self.label} - {other.label})")

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        f = self._func
        return self._derived(lambda x: -f(x), f"-{self.label}")

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        f, g = self._func, other._func
        return self._derived(lambda x: f(x) * g(x), f"{self.label}*{other.label}")

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, numbers.Number):
            return NotImplemented
        f = self._func
        c = complex(other)
        return self._derived(lambda x: f(x) / c, f"{self.label}/{other}")

    def __pow__(self, k):
        if not isinstance(k, numbers.Integral) or k < 0:
            raise ValueError("fields only support non-negative integer powers")
        f = self._func
        k = int(k)
        return self._derived(lambda x: f(x) ** k, f"{self.label}^{k}")

    def conj(self) -> "ScalarField":
        f = self._func
        return self._derived(lambda x: np.conj(f(x)), f"conj({self.label})")

    def real(self) -> "ScalarField":
        f = self._func
        return self._derived(lambda x: complex(f(x)).real, f"Re({self.label})")

    def imag(self) -> "ScalarField":
        f = self._func
        return self._derived(lambda x: complex(f(x)).imag, f"Im({self.label})")


@dataclass(frozen=True)
class EigenData:
    """Eigenvalues ``(lambda, mu)`` of the tension and conformality operators."""

    lam: complex
    mu: complex

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "mu", complex(self.mu))
        if not (np.isfinite(self.lam) and np.isfinite(self.mu)):
            raise ValueError("eigenvalues must be finite")

    def polynomial(self, d: int) -> "EigenData":
        """Eigenvalues of homogeneous degree-``d`` polynomials in an eigenfamily."""
        return EigenData(d * self.lam + d * (d - 1) * self.mu, d * d * self.mu)


@dataclass(frozen=True)
class FirstFundamentalData:
    """Eigenvalues of the pull-back metric on the horizontal space at a point.

    ``gram`` is the 2x2 Gram matrix of ``(grad u, grad v)``; ``u`` and ``v``
    are the real and imaginary parts of the field at the point.
    """

    lam1: float
    lam2: float
    gram: np.ndarray
    u: float
    v: float
    degenerate: bool = False

    @property
    def trace(self) -> float:
        return float(self.gram[0, 0] + self.gram[1, 1])

    def closed_form(self, mu: float) -> tuple[float, float]:
        """``((|grad u|^2 + |grad v|^2) -+ mu (u^2 + v^2)) / 2``, ascending."""
        shift = float(np.real(mu)) * (self.u**2 + self.v**2)
        a, b = 0.5 * (self.trace + shift), 0.5 * (self.trace - shift)
        return (min(a, b), max(a, b))

    @property
    def conformality_gap(self) -> float:
        """``lam1^2 - lam2^2`` as a non-negative number."""
        return abs(self.lam1**2 - self.lam2**2)


# ---------------------------------------------------------------------------
# frame machinery


def _frame_curves(p, frame: Sequence[np.ndarray] | None):
    spec = p.spec
    x = p.ambient
    if frame is None:
        return spec.frame_arrays(x), spec.frame_geodesic_factories(x)
    vecs = [np.asarray(v) for v in frame]
    return vecs, [spec.geodesic_factory(x, v) for v in vecs]


def gradient(f: ScalarField, p: ManifoldPoint, stencil: Stencil = FIRST_DERIVATIVE,
             frame: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Complex coefficients ``X_i(f)`` of the gradient over the frame at ``p``."""
    _, curves = _frame_curves(p, frame)
    return np.array([complex(stencil_derivative(lambda t, c=c: f(c(t)), stencil)) for c in curves])


def gradient_vector(f: ScalarField, p: ManifoldPoint, stencil: Stencil = FIRST_DERIVATIVE,
                    frame: Sequence[np.ndarray] | None = None):
    """Return ``(grad u, grad v)`` as ambient tangent vectors, ``f = u + iv``."""
    vecs, _ = _frame_curves(p, frame)
    coeffs = gradient(f, p, stencil, frame)
    gu = sum(c.real * v for c, v in zip(coeffs, vecs))
    gv = sum(c.imag * v for c, v in zip(coeffs, vecs))
    return gu, gv


def real_jacobian(f: ScalarField, p: ManifoldPoint, stencil: Stencil = FIRST_DERIVATIVE,
                  frame: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """The real 2 x m matrix ``[X_i(u); X_i(v)]``."""
    c = gradient(f, p, stencil, frame)
    return np.vstack([c.real, c.imag])


def tension(f: ScalarField, p: ManifoldPoint, stencil: Stencil = SECOND_DERIVATIVE,
            frame: Sequence[np.ndarray] | None = None) -> complex:
    """Laplace-Beltrami operator of ``f`` at ``p``."""
    _, curves = _frame_curves(p, frame)
    f0 = f(p)
    total = 0j
    for c in curves:
        total += complex(stencil_derivative(lambda t, c=c: f0 if t == 0 else f(c(t)), stencil))
    return total


def conformality(f: ScalarField, g: ScalarField, p: ManifoldPoint, stencil: Stencil = FIRST_DERIVATIVE,
                 frame: Sequence[np.ndarray] | None = None) -> complex:
    """``kappa(f, g) = g(grad f, grad g)`` extended complex-bilinearly."""
    a = gradient(f, p, stencil, frame)
    b = a if g is f else gradient(g, p, stencil, frame)
    return complex(np.sum(a * b))


def dphi_norm_sq(f: ScalarField, p: ManifoldPoint, stencil: Stencil = FIRST_DERIVATIVE,
                 frame: Sequence[np.ndarray] | None = None) -> float:
    """``|d f|^2 = kappa(u, u) + kappa(v, v)``."""
    c = gradient(f, p, stencil, frame)
    return float(np.sum(c.real**2 + c.imag**2))


def p_tension(f: ScalarField, p: ManifoldPoint, pexp: float, stencil: Stencil = FIRST_DERIVATIVE,
              second: Stencil = SECOND_DERIVATIVE, outer_step: float = OUTER_STEP) -> complex:
    """p-tension field ``|df|^(p-2) [tau(f) + df(grad log |df|^(p-2))]``.

    The gradient of ``|df|^2`` is taken by a first-order stencil of step
    ``outer_step`` applied to :func:`dphi_norm_sq` along the frame geodesics.
    """
    if not pexp > 1:
        raise ValueError("p-tension needs p > 1")
    norm_sq = dphi_norm_sq(f, p, stencil)
    if norm_sq <= DPHI_MIN:
        raise DegeneratePoint(f"|df|^2 = {norm_sq:.2e} at this point")
    tau = tension(f, p, second)
    if pexp == 2:
        return tau
    spec = p.spec
    coeffs = gradient(f, p, stencil)
    outer = Stencil(order=1, points=stencil.points, step=outer_step)
    dnorm = np.array([
        stencil_derivative(lambda t, c=c: dphi_norm_sq(f, ManifoldPoint(spec, c(t), tol=1e-8), stencil), outer)
        for c in spec.frame_geodesic_factories(p.ambient)
    ])
    correction = 0.5 * (pexp - 2) / norm_sq * complex(np.sum(dnorm * coeffs))
    return norm_sq ** (0.5 * (pexp - 2)) * (tau + correction)


def first_fundamental_eigenvalues(f: ScalarField, p: ManifoldPoint, stencil: Stencil = FIRST_DERIVATIVE,
                                  frame: Sequence[np.ndarray] | None = None) -> FirstFundamentalData:
    """Eigenvalues of ``f^* h`` from the Gram-Schmidt frame of ``(grad u, grad v)``.

    At a critical point (Gram determinant <= 1e-14) the result is flagged
    ``degenerate`` and ``lam1`` is set to 0.
    """
    value = f(p)
    c = gradient(f, p, stencil, frame)
    # coefficients in an orthonormal frame, so plain dot products are metric values
    gu, gv = c.real, c.imag
    gram = np.array([[gu @ gu, gu @ gv], [gu @ gv, gv @ gv]])
    det = gram[0, 0] * gram[1, 1] - gram[0, 1] ** 2
    if det <= GRAM_DET_MIN:
        return FirstFundamentalData(0.0, float(np.trace(gram)), gram, value.real, value.imag, degenerate=True)
    try:
        n1, n2 = gram_schmidt([gu, gv])
    except DegenerateInput:
        return FirstFundamentalData(0.0, float(np.trace(gram)), gram, value.real, value.imag, degenerate=True)
    d1 = np.array([gu @ n1, gv @ n1])
    d2 = np.array([gu @ n2, gv @ n2])
    lam1, lam2 = eig_sym2(d1 @ d1, d1 @ d2, d2 @ d2)
    return FirstFundamentalData(lam1, lam2, gram, value.real, value.imag)


def estimate_eigenpair(f: ScalarField, spec: ManifoldSpec, sample_count: int, rng: np.random.Generator,
                       points: Sequence[ManifoldPoint] | None = None, first: Stencil = FIRST_DERIVATIVE,
                       second: Stencil = SECOND_DERIVATIVE):
    """Least-squares fit of ``tau(f) = lambda f`` and ``kappa(f, f) = mu f^2``.

    Returns ``(EigenData, residuals)`` where ``residuals`` holds the max
    absolute deviations of both identities over the usable samples.
    """
    if sample_count < 10:
        raise ValueError("estimate_eigenpair needs at least 10 samples")
    if points is None:
        points = [random_point(spec, rng) for _ in range(sample_count)]
    vals = np.array([f(p) for p in points])
    taus = np.array([tension(f, p, second) for p in points])
    kaps = np.array([conformality(f, f, p, first) for p in points])
    sq = vals**2
    use_l = np.abs(vals) >= FIT_CUTOFF
    use_m = np.abs(sq) >= FIT_CUTOFF
    if use_l.sum() < 5 or use_m.sum() < 5:
        raise InsufficientSamples(
            f"only {int(use_l.sum())} / {int(use_m.sum())} usable samples for the lambda / mu fits"
        )
    lam = np.vdot(vals[use_l], taus[use_l]) / np.vdot(vals[use_l], vals[use_l])
    mu = np.vdot(sq[use_m], kaps[use_m]) / np.vdot(sq[use_m], sq[use_m])
    residuals = {
        "lambda": float(np.max(np.abs(taus[use_l] - lam * vals[use_l]))),
        "mu": float(np.max(np.abs(kaps[use_m] - mu * sq[use_m]))),
        "samples_lambda": int(use_l.sum()),
        "samples_mu": int(use_m.sum()),
    }
    return EigenData(lam, mu), residuals


def product_rule_check(f: ScalarField, g: ScalarField, p: ManifoldPoint, first: Stencil = FIRST_DERIVATIVE,
                       second: Stencil = SECOND_DERIVATIVE) -> float:
    """``|tau(fg) - (tau(f) g + 2 kappa(f, g) + f tau(g))|`` at ``p``."""
    lhs = tension(f * g, p, second)
    rhs = tension(f, p, second) * g(p) + 2.0 * conformality(f, g, p, first) + f(p) * tension(g, p, second)
    return abs(lhs - rhs)


def coordinate_derivative_rules(spec: ManifoldSpec, x: np.ndarray, j: int, alpha: int) -> dict[str, complex]:
    """Closed-form derivatives of the coordinate ``z_{j alpha}`` along basis fields.

    Only basis elements with a known closed form are included; keys match
    :attr:`ManifoldSpec.lie_basis` names.  Indices are 1-based.  On Sp(n)
    the coefficient for ``Xa`` and ``Xb`` is ``i/2``: both blocks carry a
    ``1/sqrt 2`` on top of the one already inside ``X_rs``.
    """
    n = spec.n
    x = np.asarray(x)
    r2 = math.sqrt(2.0)

    def z(a, b):
        return complex(x[a - 1, b - 1])

    def w(a, b):
        return complex(x[a - 1, n + b - 1])

    pairs = [(r, s) for r in range(1, n + 1) for s in range(r + 1, n + 1)]
    d = lambda a, b: 1.0 if a == b else 0.0  # noqa: E731
    out: dict[str, complex] = {}
    if spec.kind in (Kind.SO, Kind.U):
        for r, s in pairs:
            out[f"Y{r}{s}"] = (z(j, r) * d(alpha, s) - z(j, s) * d(alpha, r)) / r2
        if spec.kind is Kind.U:
            for r, s in pairs:
                out[f"iX{r}{s}"] = 1j * (z(j, r) * d(alpha, s) + z(j, s) * d(alpha, r)) / r2
            for t in range(1, n + 1):
                out[f"iD{t}"] = 1j * z(j, alpha) * d(alpha, t)
        return out
    if spec.kind is Kind.SP:
        for r, s in pairs:
            out[f"Xa{r}{s}"] = 0.5j * (z(j, r) * d(s, alpha) + z(j, s) * d(r, alpha))
        for r, s in pairs:
            out[f"Xb{r}{s}"] = 0.5j * (w(j, r) * d(s, alpha) + w(j, s) * d(r, alpha))
        for t in range(1, n + 1):
            out[f"Da{t}"] = 1j * z(j, alpha) * d(alpha, t) / r2
            out[f"Dc{t}"] = -w(j, alpha) * d(alpha, t) / r2
        return out
    raise ValueError(f"no coordinate derivative rules on {spec.name}")
