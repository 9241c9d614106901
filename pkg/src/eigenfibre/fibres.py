"""Sampling level sets of complex-valued fields and measuring their geometry.

A fibre ``K = f^{-1}(c)`` of a submersion ``f: M -> C`` has codimension
two; its normal space inside ``T_p M`` is spanned by ``grad u`` and
``grad v`` (``f = u + iv``).  Points on ``K`` are found by Gauss-Newton on
``(Re f - Re c, Im f - Im c)`` with minimum-norm steps in the tangent space,
followed by a retraction back to ``M``.  The mean curvature vector is the
normal part of the averaged accelerations of curves in ``K`` leaving the
point along an orthonormal basis of ``T_p K``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import (
    FIRST_DERIVATIVE,
    ScalarField,
    first_fundamental_eigenvalues,
    gradient,
    tension,
)
from .errors import DegeneratePoint, FibreNotFound, ProjectionFailed, RetractFailed
from .manifolds import ManifoldPoint, ManifoldSpec, _pivoted_orthonormal
from .numerics import Stencil, euclidean_inner, stencil_derivative

log = logging.getLogger(__name__)

FIBRE_TOL = 1e-10
SIGMA_MIN = 1e-3
CURVE_STEP = 1e-2
HC_STEP = 1e-3
DUPLICATE_DIST = 1e-6

__all__ = [
    "FibrePoint",
    "MeanCurvatureEstimate",
    "RegularityCertificate",
    "find_fibre_point",
    "sample_fibre",
    "regularity_certificate",
    "fibre_tangent_frame",
    "curve_in_fibre",
    "mean_curvature",
    "hc_gap",
    "hc_first_order_check",
    "bg_identity_check",
]


@dataclass(frozen=True, eq=False)
class FibrePoint:
    point: ManifoldPoint
    residual: float
    target: complex = 0j
    duplicate_of: int | None = None

    @property
    def ambient(self) -> np.ndarray:
        return self.point.ambient

    @property
    def spec(self) -> ManifoldSpec:
        return self.point.spec


@dataclass(frozen=True, eq=False)
class MeanCurvatureEstimate:
    vector: np.ndarray
    norm: float
    step: float
    normal_accelerations: np.ndarray = field(repr=False)
    """Per fibre direction, the two components of the normal acceleration."""


@dataclass(frozen=True)
class RegularityCertificate:
    points_tested: int
    min_singular_value: float
    sigma_min: float = SIGMA_MIN

    @property
    def passed(self) -> bool:
        return self.points_tested > 0 and self.min_singular_value > self.sigma_min


# ---------------------------------------------------------------------------
# Gauss-Newton machinery


def _raw_frame_jacobian(f: ScalarField, spec: ManifoldSpec, x: np.ndarray, stencil: Stencil):
    vecs = spec.frame_arrays(x)
    curves = spec.frame_geodesic_factories(x)
    coeffs = np.array([complex(stencil_derivative(lambda t, c=c: f(c(t)), stencil)) for c in curves])
    return vecs, np.vstack([coeffs.real, coeffs.imag])


def _residual(f: ScalarField, x: np.ndarray, c: complex) -> np.ndarray:
    val = f(x) - c
    return np.array([val.real, val.imag])


def _newton(f: ScalarField, spec: ManifoldSpec, x: np.ndarray, c: complex, max_iter: int,
            tol: float, stencil: Stencil = FIRST_DERIVATIVE, polish: int = 2):
    """Damped Gauss-Newton.  Returns ``(x, |r|, converged)``.

    After reaching ``tol`` the iteration keeps going while the residual still
    drops (at most ``polish`` extra steps), so accepted points sit at
    rounding level.
    """
    r = _residual(f, x, c)
    rn = float(np.linalg.norm(r))
    extra = 0
    for _ in range(max_iter):
        if rn <= tol:
            if extra >= polish or rn < 1e-15:
                break
            extra += 1
        vecs, jac = _raw_frame_jacobian(f, spec, x, stencil)
        delta, *_ = np.linalg.lstsq(jac, -r, rcond=1e-12)
        step = sum(d * v for d, v in zip(delta, vecs))
        scale = 1.0
        improved = False
        for _ in range(30):
            try:
                trial = spec.retract_array(x + scale * step)
            except RetractFailed:
                scale *= 0.5
                continue
            rt = _residual(f, trial, c)
            rtn = float(np.linalg.norm(rt))
            if rtn < rn or (rn <= tol and rtn <= tol):
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
        x, r, rn = trial, rt, rtn
    return x, rn, rn <= tol


def find_fibre_point(f: ScalarField, c: complex = 0j, seed_point=None, rng: np.random.Generator | None = None,
                     tol: float = FIBRE_TOL, max_iter: int = 100, restarts: int = 20) -> FibrePoint:
    """Land on ``f^{-1}(c)`` by Gauss-Newton from ``seed_point`` or random starts.

    Raises
    ------
    FibreNotFound
        After ``restarts`` fresh random starts; the best point reached is
        attached to the exception.
    """
    spec = f.spec
    c = complex(c)
    best_x, best_r = None, math.inf
    starts = []
    if seed_point is not None:
        starts.append(seed_point.ambient if isinstance(seed_point, ManifoldPoint) else np.asarray(seed_point))
    for attempt in range(restarts + 1):
        if attempt < len(starts):
            x0 = starts[attempt]
        else:
            if rng is None:
                raise ValueError("find_fibre_point needs an rng when no seed point is given")
            x0 = spec.random_array(rng)
        x, rn, ok = _newton(f, spec, x0, c, max_iter, tol)
        if rn < best_r:
            best_x, best_r = x, rn
        if ok:
            return FibrePoint(ManifoldPoint(spec, x), rn, c)
    raise FibreNotFound(
        f"no point of {f.label} = {c} found on {spec.name} (best residual {best_r:.3e})",
        best_point=None if best_x is None else ManifoldPoint(spec, best_x, tol=1e-8),
        best_residual=best_r,
    )


def sample_fibre(f: ScalarField, c: complex, count: int, rng: np.random.Generator,
                 tol: float = FIBRE_TOL, retries: int = 5) -> list[FibrePoint]:
    """``count`` fibre points from independent random starts.

    A point closer than 1e-6 to an earlier one is redrawn up to ``retries``
    times and then kept with ``duplicate_of`` set.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out: list[FibrePoint] = []
    for _ in range(count):
        for attempt in range(retries + 1):
            fp = find_fibre_point(f, c, rng=rng, tol=tol)
            dup = next(
                (i for i, q in enumerate(out) if np.linalg.norm(q.ambient - fp.ambient) < DUPLICATE_DIST),
                None,
            )
            if dup is None:
                break
            if attempt == retries:
                log.info("fibre sample duplicates point %d after %d retries", dup, retries)
                fp = FibrePoint(fp.point, fp.residual, fp.target, duplicate_of=dup)
        out.append(fp)
    return out


def regularity_certificate(f: ScalarField, c: complex, points, sigma_min: float = SIGMA_MIN) -> RegularityCertificate:
    """Smallest singular value of the real 2 x m Jacobian over ``points``."""
    smallest = math.inf
    count = 0
    for fp in points:
        p = fp.point if isinstance(fp, FibrePoint) else fp
        _, jac = _raw_frame_jacobian(f, p.spec, p.ambient, FIRST_DERIVATIVE)
        smallest = min(smallest, float(np.linalg.svd(jac, compute_uv=False)[-1]))
        count += 1
    return RegularityCertificate(count, smallest, sigma_min)


# ---------------------------------------------------------------------------
# fibre geometry


def _normal_basis(f: ScalarField, p: ManifoldPoint, sigma_min: float):
    vecs, jac = _raw_frame_jacobian(f, p.spec, p.ambient, FIRST_DERIVATIVE)
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv[-1] <= sigma_min:
        raise DegeneratePoint(f"Jacobian singular value {sv[-1]:.2e} <= {sigma_min:.0e}")
    # orthonormal basis of the row space, in frame coordinates
    q, _ = np.linalg.qr(jac.T)
    return vecs, jac, q


def fibre_tangent_frame(f: ScalarField, fp, sigma_min: float = SIGMA_MIN) -> list[np.ndarray]:
    """Orthonormal basis of ``ker df`` inside ``T_p M`` (``m - 2`` ambient vectors).

    Deterministic: frame vectors are projected onto the kernel and
    orthonormalised greedily, largest residual first, ties by frame index.
    """
    p = fp.point if isinstance(fp, FibrePoint) else fp
    vecs, _, q = _normal_basis(f, p, sigma_min)
    m = len(vecs)
    proj = np.eye(m) - q @ q.T
    coords = _pivoted_orthonormal([proj[:, i] for i in range(m)], m - 2)
    return [sum(ci * v for ci, v in zip(cvec, vecs)) for cvec in coords]


def curve_in_fibre(f: ScalarField, fp: FibrePoint, v: np.ndarray, t: float, tol: float = FIBRE_TOL,
                   max_iter: int = 50) -> ManifoldPoint:
    """Geodesic step along fibre-tangent ``v`` followed by Newton re-projection.

    Newton steps are minimum-norm, hence normal to the fibre at the current
    iterate; the projection is polished to rounding level so the curve is
    smooth enough for second differences.
    """
    if abs(t) > 0.1:
        raise ValueError("curve_in_fibre is only meant for |t| <= 0.1")
    spec = fp.spec
    if t == 0:
        return fp.point
    x0 = spec.geodesic_factory(fp.ambient, np.asarray(v))(t)
    x, rn, ok = _newton(f, spec, x0, fp.target, max_iter, tol, polish=3)
    if not ok:
        raise ProjectionFailed(f"re-projection stalled at residual {rn:.3e}")
    return ManifoldPoint(spec, x)


def mean_curvature(f: ScalarField, fp: FibrePoint, h: float = CURVE_STEP, sigma_min: float = SIGMA_MIN,
                   points: int = 5) -> MeanCurvatureEstimate:
    """Mean curvature vector of the fibre through ``fp``, as an ambient vector.

    ``H = (1/(m-2)) sum_i P_N c_i''(0)`` with ``c_i`` from
    :func:`curve_in_fibre` and ``P_N`` the projection onto
    ``span(grad u, grad v)``.
    """
    p = fp.point
    spec = p.spec
    vecs, _, q = _normal_basis(f, p, sigma_min)
    normals = [sum(qi * v for qi, v in zip(q[:, k], vecs)) for k in range(2)]
    tangents = fibre_tangent_frame(f, fp, sigma_min)
    stencil = Stencil(order=2, points=points, step=h)
    comps = np.zeros((len(tangents), 2))
    for i, v in enumerate(tangents):
        acc = stencil_derivative(lambda t, v=v: curve_in_fibre(f, fp, v, t).ambient, stencil)
        comps[i] = [euclidean_inner(nk, acc) for nk in normals]
    mean = comps.mean(axis=0) if len(tangents) else np.zeros(2)
    vector = mean[0] * normals[0] + mean[1] * normals[1]
    return MeanCurvatureEstimate(vector, float(np.hypot(*mean)), h, comps)


def hc_gap(f: ScalarField, p: ManifoldPoint) -> float:
    """``lam2^2 - lam1^2`` for the first fundamental form at ``p`` (non-negative)."""
    data = first_fundamental_eigenvalues(f, p)
    if data.degenerate:
        raise DegeneratePoint("critical point: first fundamental form has rank < 2")
    return data.lam2**2 - data.lam1**2


def hc_first_order_check(f: ScalarField, fp, directions: int = 10, rng: np.random.Generator | None = None,
                         step: float = HC_STEP) -> tuple[float, float]:
    """Horizontal conformality to first order at a point.

    Returns ``(|lam1^2 - lam2^2|, max_X |X(lam1^2 - lam2^2)|)`` where ``X``
    ranges over ``directions`` random unit tangent vectors and derivatives
    are five-point central differences along geodesics.
    """
    p = fp.point if isinstance(fp, FibrePoint) else fp
    spec = p.spec
    gap = hc_gap(f, p)
    if rng is None:
        raise ValueError("hc_first_order_check needs an rng for the random directions")
    vecs = spec.frame_arrays(p.ambient)
    stencil = Stencil(order=1, points=5, step=step)
    worst = 0.0
    for _ in range(directions):
        coeffs = rng.standard_normal(len(vecs))
        coeffs /= np.linalg.norm(coeffs)
        x = sum(ci * v for ci, v in zip(coeffs, vecs))
        curve = spec.geodesic_factory(p.ambient, x)
        deriv = stencil_derivative(lambda t: hc_gap(f, ManifoldPoint(spec, curve(t), tol=1e-8)), stencil)
        worst = max(worst, abs(float(deriv)))
    return abs(gap), worst


def bg_identity_check(f, fp: FibrePoint, h: float = CURVE_STEP) -> float:
    """``|tau(f) + (m - 2) df(H)|`` at a point of a fibre."""
    field_ = f.field if hasattr(f, "field") and isinstance(getattr(f, "field"), ScalarField) else f
    p = fp.point
    est = mean_curvature(field_, fp, h)
    coeffs = gradient(field_, p)
    vecs = p.spec.frame_arrays(p.ambient)
    dphi_h = sum(complex(ci) * euclidean_inner(v, est.vector) for ci, v in zip(coeffs, vecs))
    m = p.spec.dim
    return abs(tension(field_, p) + (m - 2) * dphi_h)
