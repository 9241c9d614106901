"""Dense linear algebra, finite-difference stencils and random sampling.

Everything here is a pure function of its arguments.  Randomness always
comes from an explicit :class:`numpy.random.Generator`; there is no global
state anywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateInput

SYMMETRY_TOL = 1e-12
INDEPENDENCE_TOL = 1e-12

__all__ = [
    "Stencil",
    "FIRST_DERIVATIVE",
    "SECOND_DERIVATIVE",
    "make_rng",
    "split_rng",
    "hermitian",
    "symmetric",
    "euclidean_inner",
    "gram_schmidt",
    "eig_sym2",
    "matrix_exp",
    "skew_exp_factory",
    "diff_along_curve",
    "stencil_derivative",
    "haar_sample",
    "uniform_sphere_point",
]


# ---------------------------------------------------------------------------
# random generators


def make_rng(seed: int) -> np.random.Generator:
    """Root generator for a run.  Identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def split_rng(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Deterministically derive ``count`` independent child generators."""
    return list(rng.spawn(count))


# ---------------------------------------------------------------------------
# matrices


def hermitian(a, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Return ``a`` as a complex array after checking ``a == a^*`` entrywise."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > tol:
        raise ValueError("matrix is not Hermitian")
    return a


def symmetric(a, tol: float = SYMMETRY_TOL) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        raise ValueError("matrix is not symmetric")
    return a


def euclidean_inner(x, y) -> float:
    """Real Euclidean inner product of two ambient arrays, ``Re sum(conj(x) * y)``.

    For complex matrices this is ``Re trace(X Y^*)``.
    """
    return float(np.real(np.vdot(x, y)))


def gram_schmidt(vectors: Sequence, inner: Callable | None = None) -> list[np.ndarray]:
    """Orthonormalise ``vectors`` with respect to the real bilinear form ``inner``.

    Uses modified Gram-Schmidt with one re-orthogonalisation pass, which
    keeps the output Gram matrix within 1e-12 of the identity for the
    well-conditioned inputs this package produces.

    Raises
    ------
    DegenerateInput
        If the smallest eigenvalue of the input Gram matrix is not above 1e-12.
    """
    inner = euclidean_inner if inner is None else inner
    vecs = [np.array(v, copy=True) for v in vectors]
    if not vecs:
        return []
    gram = np.array([[inner(a, b) for b in vecs] for a in vecs])
    gram = 0.5 * (gram + gram.T)
    if np.linalg.eigvalsh(gram)[0] <= INDEPENDENCE_TOL:
        raise DegenerateInput("vectors are not linearly independent")
    out: list[np.ndarray] = []
    for v in vecs:
        w = v
        for _ in range(2):
            for q in out:
                w = w - inner(q, w) * q
        out.append(w / math.sqrt(inner(w, w)))
    return out


def eig_sym2(a11: float, a12: float, a22: float) -> tuple[float, float]:
    """Ascending eigenvalues of the real symmetric matrix [[a11, a12], [a12, a22]].

    The discriminant is evaluated as ``hypot(a11 - a22, 2 a12)`` so that
    nearly equal eigenvalues are resolved to rounding accuracy.
    """
    mean = 0.5 * (a11 + a22)
    half_gap = 0.5 * math.hypot(a11 - a22, 2.0 * a12)
    return mean - half_gap, mean + half_gap


def matrix_exp(x) -> np.ndarray:
    """Matrix exponential (scaling and squaring with a Pade core)."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    return scipy.linalg.expm(x)


def skew_exp_factory(z) -> Callable[[float], np.ndarray]:
    """Return ``t -> exp(t z)`` for a skew-Hermitian (or real skew) ``z``.

    One Hermitian eigendecomposition is shared by every ``t``, which makes
    repeated stencil evaluations along a one-parameter subgroup cheap.
    The result is exactly unitary up to rounding.
    """
    z = np.asarray(z)
    real = not np.iscomplexobj(z)
    evals, evecs = np.linalg.eigh(-1j * z)
    evecs_h = evecs.conj().T
    eye = np.eye(z.shape[0], dtype=float if real else complex)

    def exp_t(t: float) -> np.ndarray:
        if t == 0:
            return eye.copy()
        out = (evecs * np.exp(1j * t * evals)) @ evecs_h
        return out.real if real else out

    return exp_t


# ---------------------------------------------------------------------------
# finite differences


def _central_weights(order: int, points: int) -> np.ndarray:
    half = points // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    vander = np.vander(offsets, points, increasing=True).T
    rhs = np.zeros(points)
    rhs[order] = math.factorial(order)
    w = np.linalg.solve(vander, rhs)
    # impose the exact (anti)symmetry of central stencils
    w = 0.5 * (w - w[::-1]) if order % 2 else 0.5 * (w + w[::-1])
    if order % 2 == 0:
        w[half] = -(w[:half].sum() + w[half + 1:].sum())
    return w


@dataclass(frozen=True)
class Stencil:
    """Central finite-difference stencil for the derivative of a given order.

    Attributes
    ----------
    order : 1 or 2
    points : odd number of abscissae, at least 3
    step : spacing ``h``
    """

    order: int
    points: int = 5
    step: float = 1e-4
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("stencil order must be 1 or 2")
        if self.points < 3 or self.points % 2 == 0:
            raise ValueError("stencil needs an odd number (>= 3) of points")
        if not self.step > 0:
            raise ValueError("stencil step must be positive")
        object.__setattr__(self, "_weights", _central_weights(self.order, self.points))

    @property
    def weights(self) -> np.ndarray:
        return self._weights.copy()

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        half = self.points // 2
        return tuple(range(-half, half + 1))

    @property
    def abscissae(self) -> np.ndarray:
        return self.step * np.array(self.offsets, dtype=float)

    @property
    def exactness_degree(self) -> int:
        # even-order central stencils are also exact on the next odd power
        return self.points - 1 + (1 - self.order % 2)

    def nonzero(self) -> list[tuple[float, float]]:
        """``(t, weight)`` pairs with the zero-weight node dropped."""
        return [
            (k * self.step, w)
            for k, w in zip(self.offsets, self._weights)
            if abs(w) > 1e-14
        ]

    def combine(self, values):
        """Apply the stencil to samples taken at :attr:`abscissae`."""
        values = np.asarray(values)
        acc = np.tensordot(self._weights, values, axes=(0, 0))
        return acc / self.step**self.order


FIRST_DERIVATIVE = Stencil(order=1, points=5, step=1e-4)
SECOND_DERIVATIVE = Stencil(order=2, points=5, step=1e-3)


def stencil_derivative(sample: Callable[[float], object], stencil: Stencil):
    """Finite-difference derivative of ``t -> sample(t)`` at ``t = 0``.

    ``sample`` may return scalars or arrays.  Nodes are combined in
    symmetric pairs, ``f(kh) - f(-kh)`` or ``f(kh) + f(-kh) - 2 f(0)``, so
    constants differentiate to exactly zero.
    """
    h = stencil.step
    w = stencil._weights
    half = stencil.points // 2
    even = stencil.order % 2 == 0
    f0 = np.asarray(sample(0.0)) if even else None
    total = None
    for k in range(1, half + 1):
        plus, minus = np.asarray(sample(k * h)), np.asarray(sample(-k * h))
        term = w[half + k] * ((plus + minus - 2 * f0) if even else (plus - minus))
        total = term if total is None else total + term
    return total / h**stencil.order


def diff_along_curve(curve: Callable[[float], object], f: Callable, stencil: Stencil) -> complex:
    """Estimate ``d^k/dt^k f(curve(t))`` at ``t = 0`` for the stencil's order ``k``."""
    return complex(stencil_derivative(lambda t: f(curve(t)), stencil))


# ---------------------------------------------------------------------------
# sampling


def _qr_haar(a: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    phases = d / np.abs(d)
    return q * phases.conj()[None, :] if np.iscomplexobj(q) else q * np.sign(d)[None, :]


def _quaternionic_partner(c: np.ndarray) -> np.ndarray:
    # column n+j of a quaternionic matrix is J(column j), J(x, y) = (-conj y, conj x)
    n = c.shape[0] // 2
    return np.concatenate([-c[n:].conj(), c[:n].conj()])


def haar_sample(group: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of SO(n), U(n) or Sp(n).

    SO(n) and U(n) use the QR decomposition of a Gaussian matrix with the
    sign/phase of ``diag(R)`` divided out.  Sp(n) uses the quaternionic
    analogue: Gram-Schmidt on quaternionic Gaussian columns, so that the
    returned 2n x 2n matrix has the block form ``[[z, w], [-conj w, conj z]]``
    exactly.
    """
    key = group.lower()
    if n < (2 if key == "so" else 1):
        raise ValueError(f"haar_sample: n={n} too small for {group}")
    if key == "so":
        q = _qr_haar(rng.standard_normal((n, n)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        return q
    if key == "u":
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return _qr_haar(g / math.sqrt(2.0))
    if key == "sp":
        cols: list[np.ndarray] = []
        for _ in range(n):
            v = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
            for _ in range(2):
                for c in cols:
                    v = v - np.vdot(c, v) * c
            v = v / np.linalg.norm(v)
            cols.extend([v, _quaternionic_partner(v)])
        first = np.stack(cols[0::2], axis=1)
        z, w_neg_bar = first[:n], first[n:]
        w = -w_neg_bar.conj()
        return np.block([[z, w], [-w.conj(), z.conj()]])
    raise ValueError(f"unknown group {group!r}")


def uniform_sphere_point(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the unit sphere S^dim in R^(dim+1) (normalised Gaussian)."""
    if dim < 1:
        raise ValueError("sphere dimension must be positive")
    while True:
        g = rng.standard_normal(dim + 1)
        norm = np.linalg.norm(g)
        if norm > 1e-8:
            return g / norm
