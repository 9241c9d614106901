"""Explicit eigenfunctions and eigenfamilies with their predicted eigenvalues.

Every constructor returns a :class:`CatalogEntry` bundling the field, the
predicted ``(lambda, mu)`` and whether the zero fibre is claimed to be a
regular level (hence a codimension-two submanifold).

Trace families ``x -> trace(p^t a x^t)`` are read as the rank-one pairing
``sum_{j, alpha} p_j a_alpha x_{j alpha}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .calculus import EigenData, ScalarField
from .errors import IndexOutOfRange, MixedFamilies, NotIsotropic, SingularMatrix, ZeroCoefficient
from .manifolds import (
    ManifoldSpec,
    complex_projective,
    quaternionic_unitary,
    special_orthogonal,
    sphere,
    sphere_to_complex,
    unitary,
)

ISOTROPY_TOL = 1e-12
DET_MIN = 1e-10

FAMILY_IDS = (
    "SphereBasic",
    "CPBasic",
    "SOTrace",
    "UTrace",
    "SpTrace",
    "HomogeneousPoly",
    "SphereQuadraticA",
    "CPDiagonal",
    "SO2nDegreeD",
    "UFirstRowDegreeD",
    "UMinor",
    "SpZ11",
)

__all__ = [
    "FAMILY_IDS",
    "CatalogEntry",
    "sphere_basic",
    "cp_basic",
    "so_trace_family",
    "u_trace_family",
    "sp_trace_family",
    "homogeneous_poly",
    "sphere_quadratic",
    "quadratic_form_matrix",
    "cp_diagonal",
    "so2n_degree_d",
    "u_first_row_degree_d",
    "u_minor",
    "sp_z11",
    "isotropic_basis",
    "family_members",
    "matrix_coordinate",
    "sp_w_coordinate",
]


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    field: ScalarField
    predicted: EigenData
    regular_zero_claimed: bool = False
    family: str = ""
    params: Mapping[str, Any] = field(default_factory=dict)

    @property
    def spec(self) -> ManifoldSpec:
        return self.field.spec

    @property
    def label(self) -> str:
        return self.field.label


def _cvec(v, size: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=complex).reshape(-1)
    if size is not None and arr.size != size:
        raise ValueError(f"{name} must have length {size}, got {arr.size}")
    return arr


def _require_nonzero_coeffs(a: np.ndarray) -> None:
    if np.any(np.abs(a) == 0):
        raise ZeroCoefficient("every coefficient a_k must be non-zero")


# ---------------------------------------------------------------------------
# basic eigenfamilies


def sphere_basic(n: int, j: int) -> CatalogEntry:
    """``z -> z_j / |z|`` on S^(2n-1); ``(lambda, mu) = (-(2n-1), -1)``."""
    if not 1 <= j <= n:
        raise IndexOutOfRange(f"need 1 <= j <= {n}, got j={j}")
    k = j - 1

    def phi(x):
        z = sphere_to_complex(x)
        return z[k] / np.linalg.norm(z)

    return CatalogEntry(
        ScalarField(sphere(n), phi, f"phi{j}"),
        EigenData(-(2 * n - 1), -1),
        family="SphereBasic",
        params={"n": n, "j": j},
    )


def cp_basic(n: int, j: int, k: int, alpha: int) -> CatalogEntry:
    """``[z] -> z_j conj(z_k) / |z|^2`` on CP^n, ``1 <= j <= alpha < k <= n+1``."""
    if not (1 <= j <= alpha < k <= n + 1):
        raise IndexOutOfRange(f"need 1 <= j <= alpha < k <= {n + 1}, got j={j}, alpha={alpha}, k={k}")
    a, b = j - 1, k - 1

    def phi(z):
        return z[a] * np.conj(z[b]) / np.vdot(z, z).real

    return CatalogEntry(
        ScalarField(complex_projective(n), phi, f"phi{j}{k}"),
        EigenData(-4 * (n + 1), -4),
        family="CPBasic",
        params={"n": n, "j": j, "k": k, "alpha": alpha},
    )


def isotropic_basis(n: int) -> list[np.ndarray]:
    """``(e_{2k-1} + i e_{2k}) / sqrt 2`` for ``k = 1 .. n // 2``."""
    if n < 2:
        raise ValueError("isotropic_basis needs n >= 2")
    out = []
    for k in range(n // 2):
        v = np.zeros(n, dtype=complex)
        v[2 * k] = 1.0 / math.sqrt(2.0)
        v[2 * k + 1] = 1j / math.sqrt(2.0)
        out.append(v)
    return out


def so_trace_family(n: int, p, a) -> CatalogEntry:
    """``x -> sum p_j a_alpha x_{j alpha}`` on SO(n), ``a`` isotropic."""
    p = _cvec(p, n, "p")
    a = _cvec(a, n, "a")
    if not np.any(p):
        raise ValueError("p must be non-zero")
    if abs(a @ a) > ISOTROPY_TOL:
        raise NotIsotropic(f"a^t a = {a @ a:.3e} is not zero")
    return CatalogEntry(
        ScalarField(special_orthogonal(n), lambda x: p @ x @ a, "trace(p^t a x^t)"),
        EigenData(-(n - 1) / 2, -0.5),
        family="SOTrace",
        params={"n": n, "p": p, "a": a},
    )


def u_trace_family(n: int, p, a) -> CatalogEntry:
    """``z -> sum p_j a_alpha z_{j alpha}`` on U(n); ``(lambda, mu) = (-n, -1)``."""
    p = _cvec(p, n, "p")
    a = _cvec(a, n, "a")
    if not np.any(p):
        raise ValueError("p must be non-zero")
    return CatalogEntry(
        ScalarField(unitary(n), lambda z: p @ z @ a, "trace(p^t a z^t)"),
        EigenData(-n, -1),
        family="UTrace",
        params={"n": n, "p": p, "a": a},
    )


def sp_trace_family(n: int, p, a, b) -> CatalogEntry:
    """``q -> sum p_j (a_alpha z_{j alpha} + b_alpha w_{j alpha})`` on Sp(n)."""
    p = _cvec(p, n, "p")
    a = _cvec(a, n, "a")
    b = _cvec(b, n, "b")
    if not np.any(p):
        raise ValueError("p must be non-zero")
    if not (np.any(a) or np.any(b)):
        raise ValueError("(a, b) must be non-zero")
    ab = np.concatenate([a, b])

    def phi(q):
        return p @ q[:n, :] @ ab

    return CatalogEntry(
        ScalarField(quaternionic_unitary(n), phi, "trace(p^t a z^t + p^t b w^t)"),
        EigenData(-(2 * n + 1) / 2, -0.5),
        family="SpTrace",
        params={"n": n, "p": p, "a": a, "b": b},
    )


# ---------------------------------------------------------------------------
# polynomials in an eigenfamily


def homogeneous_poly(entries: Sequence[CatalogEntry], coeffs: Mapping[tuple[int, ...], complex],
                     d: int) -> CatalogEntry:
    """``P(phi_1, ..., phi_k)`` for a homogeneous polynomial of degree ``d``.

    ``coeffs`` maps exponent tuples (one exponent per entry) to coefficients.
    Prediction: ``(d lambda + d(d-1) mu, d^2 mu)``.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("need at least one family member")
    spec = entries[0].spec
    base = entries[0].predicted
    for e in entries[1:]:
        if e.spec != spec or e.predicted != base:
            raise MixedFamilies("all members must share the manifold and (lambda, mu)")
    terms = []
    for powers, c in coeffs.items():
        powers = tuple(int(k) for k in powers)
        if powers == () and d == 0:
            powers = (0,) * len(entries)
        if len(powers) != len(entries):
            raise ValueError(f"exponent tuple {powers} does not match {len(entries)} members")
        if sum(powers) != d or min(powers, default=0) < 0:
            raise ValueError(f"monomial {powers} is not of degree {d}")
        terms.append((complex(c), powers))
    funcs = [e.field._func for e in entries]

    def poly(x):
        vals = [g(x) for g in funcs]
        total = 0j
        for c, powers in terms:
            mono = c
            for v, k in zip(vals, powers):
                if k:
                    mono = mono * v**k
            total += mono
        return total

    label = f"P_{d}({', '.join(e.label for e in entries)})"
    return CatalogEntry(
        ScalarField(spec, poly, label, check_invariance=False),
        base.polynomial(d),
        family="HomogeneousPoly",
        params={"degree": d, "coeffs": dict(coeffs), "members": [e.label for e in entries]},
    )


def quadratic_form_matrix(a) -> np.ndarray:
    """Symmetric matrix ``S`` with ``sum_{k != l} a_kl z_k z_l + 1/2 sum a_kk z_k^2 = z^t S z / 2``."""
    a = np.asarray(a, dtype=complex)
    return a + a.T - np.diag(np.diag(a))


def sphere_quadratic(a) -> CatalogEntry:
    """``z -> (sum_{k != l} a_kl z_k z_l + 1/2 sum_k a_kk z_k^2) / |z|^2`` on S^(2n-1).

    Critical points on the zero fibre are exactly the unit vectors in the
    kernel of :func:`quadratic_form_matrix`, so both ``A`` and that matrix
    must be invertible (they coincide for diagonal ``A``).
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("A must be square")
    n = a.shape[0]
    s = quadratic_form_matrix(a)
    if abs(np.linalg.det(a)) <= DET_MIN:
        raise SingularMatrix("det A vanishes")
    if abs(np.linalg.det(s)) <= DET_MIN:
        raise SingularMatrix("the quadratic form of A is degenerate")
    half = 0.5 * s

    def phi(x):
        z = sphere_to_complex(x)
        return (z @ half @ z) / np.vdot(z, z).real

    return CatalogEntry(
        ScalarField(sphere(n), phi, "Phi_A"),
        EigenData(-(2 * n - 1), -1).polynomial(2),
        regular_zero_claimed=True,
        family="SphereQuadraticA",
        params={"A": a},
    )


def cp_diagonal(n: int, a) -> CatalogEntry:
    """``[z] -> (a_1 z_1 conj z_{n+1} + ... + a_n z_n conj z_{2n}) / |z|^2`` on CP^(2n-1)."""
    a = _cvec(a, n, "a")
    _require_nonzero_coeffs(a)

    def phi(z):
        return (a @ (z[:n] * np.conj(z[n:]))) / np.vdot(z, z).real

    return CatalogEntry(
        ScalarField(complex_projective(2 * n - 1), phi, "Phi_a"),
        EigenData(-8 * n, -4),
        regular_zero_claimed=True,
        family="CPDiagonal",
        params={"n": n, "a": a},
    )


def so2n_degree_d(n: int, a, d: int) -> CatalogEntry:
    """``x -> sum_k a_k (x_{1,2k-1} + i x_{1,2k})^d`` on SO(2n)."""
    a = _cvec(a, n, "a")
    _require_nonzero_coeffs(a)
    if d < 1:
        raise ValueError("degree must be >= 1")

    def phi(x):
        w = x[0, 0::2] + 1j * x[0, 1::2]
        return a @ w**d

    return CatalogEntry(
        ScalarField(special_orthogonal(2 * n), phi, f"sum a_k (x_1,2k-1 + i x_1,2k)^{d}"),
        EigenData(-(2 * n - 1) / 2, -0.5).polynomial(d),
        regular_zero_claimed=True,
        family="SO2nDegreeD",
        params={"n": n, "a": a, "d": d},
    )


def u_first_row_degree_d(n: int, a, d: int) -> CatalogEntry:
    """``z -> a_1 z_11^d + ... + a_n z_1n^d`` on U(n)."""
    a = _cvec(a, n, "a")
    _require_nonzero_coeffs(a)
    if d < 1:
        raise ValueError("degree must be >= 1")
    return CatalogEntry(
        ScalarField(unitary(n), lambda z: a @ z[0] ** d, f"sum a_k z_1k^{d}"),
        EigenData(-n, -1).polynomial(d),
        regular_zero_claimed=True,
        family="UFirstRowDegreeD",
        params={"n": n, "a": a, "d": d},
    )


def u_minor(n: int) -> CatalogEntry:
    """``z -> z_11 z_22 - z_12 z_21`` on U(n), ``n >= 3``; ``(lambda, mu) = (-2(n-1), -2)``.

    The prediction comes from the product rule together with
    ``tau(z_ja) = -n z_ja`` and ``kappa(z_ja, z_kb) = -z_jb z_ka``.
    """
    if n < 3:
        raise ValueError("u_minor needs n >= 3")
    return CatalogEntry(
        ScalarField(unitary(n), lambda z: z[0, 0] * z[1, 1] - z[0, 1] * z[1, 0], "det z[:2,:2]"),
        EigenData(-2 * (n - 1), -2),
        regular_zero_claimed=True,
        family="UMinor",
        params={"n": n},
    )


def sp_z11(n: int) -> CatalogEntry:
    """``q = z + jw -> z_11`` on Sp(n)."""
    return CatalogEntry(
        ScalarField(quaternionic_unitary(n), lambda q: q[0, 0], "z11"),
        EigenData(-(2 * n + 1) / 2, -0.5),
        regular_zero_claimed=True,
        family="SpZ11",
        params={"n": n},
    )


# ---------------------------------------------------------------------------
# coordinate helpers and family enumeration


def matrix_coordinate(spec: ManifoldSpec, j: int, alpha: int, conj: bool = False) -> ScalarField:
    """Matrix entry ``x_{j alpha}`` (1-based) of a matrix group, optionally conjugated."""
    a, b = j - 1, alpha - 1
    if conj:
        return ScalarField(spec, lambda x: np.conj(x[a, b]), f"conj(z{j}{alpha})")
    return ScalarField(spec, lambda x: x[a, b], f"z{j}{alpha}")


def sp_w_coordinate(spec: ManifoldSpec, k: int, beta: int) -> ScalarField:
    """``w_{k beta}``, the entry ``e_k q e_{n+beta}^t`` of Sp(n)."""
    n = spec.n
    a, b = k - 1, n + beta - 1
    return ScalarField(spec, lambda q: q[a, b], f"w{k}{beta}")


def family_members(family: str, spec: ManifoldSpec, p=None, alpha: int | None = None) -> list[CatalogEntry]:
    """The standard spanning members of a basic eigenfamily on ``spec``.

    ``SphereBasic``: all ``phi_j``.  ``CPBasic``: all ``phi_jk`` for the
    given ``alpha`` (default ``(n+1)//2``).  ``SOTrace``: ``phi_a`` for
    ``a`` in :func:`isotropic_basis`.  ``UTrace``: ``a = e_1 .. e_n``.
    ``SpTrace``: ``(a, b) = (e_k, 0)`` and ``(0, e_k)``.
    """
    n = spec.n
    if family == "SphereBasic":
        return [sphere_basic(n, j) for j in range(1, n + 1)]
    if family == "CPBasic":
        alpha = (n + 1) // 2 if alpha is None else alpha
        return [cp_basic(n, j, k, alpha) for j in range(1, alpha + 1) for k in range(alpha + 1, n + 2)]
    p = np.eye(n)[0] if p is None else _cvec(p, n, "p")
    if family == "SOTrace":
        return [so_trace_family(n, p, v) for v in isotropic_basis(n)]
    if family == "UTrace":
        return [u_trace_family(n, p, e) for e in np.eye(n)]
    if family == "SpTrace":
        zero = np.zeros(n)
        return [sp_trace_family(n, p, e, zero) for e in np.eye(n)] + [
            sp_trace_family(n, p, zero, e) for e in np.eye(n)
        ]
    raise ValueError(f"{family} is not a basic eigenfamily")


def monomials(count: int, d: int):
    """All exponent tuples of length ``count`` summing to ``d``."""
    for combo in itertools.combinations_with_replacement(range(count), d):
        powers = [0] * count
        for i in combo:
            powers[i] += 1
        yield tuple(powers)
