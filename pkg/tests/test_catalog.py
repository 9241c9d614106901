import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigenfibre.calculus import EigenData, conformality, estimate_eigenpair, gradient, real_jacobian
from eigenfibre.catalog import (
    FAMILY_IDS,
    cp_basic,
    cp_diagonal,
    family_members,
    homogeneous_poly,
    isotropic_basis,
    monomials,
    quadratic_form_matrix,
    so2n_degree_d,
    so_trace_family,
    sp_trace_family,
    sp_z11,
    sphere_basic,
    sphere_quadratic,
    u_first_row_degree_d,
    u_minor,
    u_trace_family,
)
from eigenfibre.errors import (
    IndexOutOfRange,
    MixedFamilies,
    NotIsotropic,
    SingularMatrix,
    ZeroCoefficient,
)
from eigenfibre.fibres import find_fibre_point
from eigenfibre.manifolds import (
    ManifoldPoint,
    complex_projective,
    complex_to_sphere,
    hopf_invariance_check,
    random_point,
    special_orthogonal,
    sphere,
    unitary,
)


def test_family_ids():
    assert len(FAMILY_IDS) == 12 and len(set(FAMILY_IDS)) == 12


class TestSphereBasic:
    def test_evaluation(self):
        e = sphere_basic(2, 1)
        assert e.field(complex_to_sphere([1, 0])) == 1
        assert e.predicted == EigenData(-3, -1)

    def test_bounds(self):
        with pytest.raises(IndexOutOfRange):
            sphere_basic(2, 3)

    def test_fit(self, rng):
        e = sphere_basic(3, 2)
        _, res = estimate_eigenpair(e.field, e.spec, 20, rng)
        assert res["lambda"] <= 1e-4 and res["mu"] <= 1e-4


class TestCPBasic:
    def test_evaluation_and_prediction(self):
        e = cp_basic(2, 1, 2, 1)
        assert e.field(np.array([1, 0, 0], dtype=complex)) == 0
        assert e.predicted == EigenData(-12, -4)

    def test_phase_invariance(self, rng):
        e = cp_basic(3, 1, 3, 2)
        assert hopf_invariance_check(e.field, random_point(e.spec, rng), 20, rng) <= 1e-14

    def test_bounds(self):
        with pytest.raises(IndexOutOfRange):
            cp_basic(2, 2, 2, 1)


class TestTraceFamilies:
    def test_so_at_identity(self):
        e = so_trace_family(4, [1, 0, 0, 0], [1, 1j, 0, 0])
        assert e.field(np.eye(4)) == 1
        assert e.predicted == EigenData(-1.5, -0.5)

    def test_so_requires_isotropy(self):
        with pytest.raises(NotIsotropic):
            so_trace_family(3, [1, 0, 0], [1, 1, 0])

    def test_so_cross_terms(self, rng):
        spec = special_orthogonal(4)
        members = family_members("SOTrace", spec)
        for _ in range(5):
            p = random_point(spec, rng)
            for a in members:
                for b in members:
                    k = conformality(a.field, b.field, p)
                    assert abs(k - (-0.5) * a.field(p) * b.field(p)) <= 1e-4

    def test_u_is_coordinate(self, rng):
        e = u_trace_family(2, [1, 0], [1, 0])
        p = random_point(e.spec, rng)
        assert e.field(p) == p.ambient[0, 0]
        assert e.predicted == EigenData(-2, -1)

    def test_sp_is_z11(self, rng):
        e = sp_trace_family(2, [1, 0], [1, 0], [0, 0])
        p = random_point(e.spec, rng)
        assert e.field(p) == p.ambient[0, 0] == sp_z11(2).field(p)
        assert e.predicted == EigenData(-2.5, -0.5)

    @pytest.mark.parametrize("e", [u_trace_family(3, [0, 1, 0], [1, 1j, 2]),
                                   sp_trace_family(2, [1, 1j], [0, 1], [1, 0])], ids=["U", "Sp"])
    def test_fit(self, e, rng):
        _, res = estimate_eigenpair(e.field, e.spec, 20, rng)
        assert res["lambda"] <= 1e-4 and res["mu"] <= 1e-4


class TestIsotropicBasis:
    def test_n2(self):
        (v,) = isotropic_basis(2)
        np.testing.assert_allclose(v, np.array([1, 1j]) / math.sqrt(2))
        assert abs(v @ v) == 0

    def test_n4_pairwise(self):
        basis = isotropic_basis(4)
        for a in basis:
            for b in basis:
                assert abs(a @ b) <= 1e-15
            so_trace_family(4, [1, 0, 0, 0], a)


class TestHomogeneousPoly:
    def test_degree_one_keeps_prediction(self):
        members = family_members("SphereBasic", sphere(2))
        e = homogeneous_poly(members, {(1, 0): 1, (0, 1): 2j}, 1)
        assert e.predicted == EigenData(-3, -1)

    def test_degree_two_prediction(self, rng):
        members = family_members("SphereBasic", sphere(2))
        e = homogeneous_poly(members, {(2, 0): 1, (1, 1): 1j, (0, 2): -0.5}, 2)
        assert e.predicted == EigenData(-8, -4)
        fit, _ = estimate_eigenpair(e.field, e.spec, 20, rng)
        assert abs(fit.lam + 8) <= 1e-4 and abs(fit.mu + 4) <= 1e-4

    def test_rejects_mixed_families(self):
        with pytest.raises(MixedFamilies):
            homogeneous_poly([sphere_basic(2, 1), sphere_basic(3, 1)], {(1, 0): 1}, 1)

    def test_rejects_inhomogeneous_terms(self):
        members = family_members("SphereBasic", sphere(2))
        with pytest.raises(ValueError):
            homogeneous_poly(members, {(2, 0): 1, (1, 0): 1}, 2)

    @given(st.integers(1, 4), st.integers(0, 4))
    def test_monomial_count(self, count, d):
        got = list(monomials(count, d))
        assert len(got) == math.comb(count + d - 1, d)
        assert all(sum(m) == d for m in got)


class TestSphereQuadratic:
    def test_witness_point(self):
        e = sphere_quadratic(np.eye(2))
        x = complex_to_sphere(np.array([1, 1j]) / math.sqrt(2))
        assert abs(e.field(x)) <= 1e-16
        assert e.predicted == EigenData(-8, -4)
        jac = real_jacobian(e.field, ManifoldPoint(e.spec, x))
        assert np.linalg.svd(jac, compute_uv=False)[-1] > 0.1

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            sphere_quadratic(np.diag([1.0, 0.0]))
        # invertible A whose symmetrised form is singular
        with pytest.raises(SingularMatrix):
            sphere_quadratic(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_quadratic_form_matrix(self):
        a = np.array([[1, 2], [3, 4]])
        np.testing.assert_array_equal(quadratic_form_matrix(a), [[1, 5], [5, 4]])


class TestCPDiagonal:
    def test_n1(self):
        e = cp_diagonal(1, [1])
        assert e.spec == complex_projective(1)
        assert e.predicted == EigenData(-8, -4)
        assert e.field(np.array([1, 0], dtype=complex)) == 0
        assert e.field(np.array([0, 1], dtype=complex)) == 0

    def test_zero_coefficient(self):
        with pytest.raises(ZeroCoefficient):
            cp_diagonal(2, [1, 0])

    def test_wirtinger_derivatives_on_fibre(self, rng):
        a = np.array([1.0, -0.5 + 2j])
        e = cp_diagonal(2, a)
        n, h = 2, 1e-6
        for _ in range(5):
            p = find_fibre_point(e.field, 0, rng=rng).ambient
            for k in range(n):
                def partial(idx):
                    # d/dz = (d/dx - i d/dy) / 2 on the lift, away from the unit sphere
                    ex = np.zeros(2 * n, dtype=complex)
                    ex[idx] = h
                    dx = (e.field(p + ex) - e.field(p - ex)) / (2 * h)
                    dy = (e.field(p + 1j * ex) - e.field(p - 1j * ex)) / (2 * h)
                    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)

                dz_k, _ = partial(k)
                _, dzbar_nk = partial(n + k)
                assert dz_k == pytest.approx(a[k] * np.conj(p[n + k]), abs=1e-8)
                assert dzbar_nk == pytest.approx(a[k] * p[k], abs=1e-8)


class TestMatrixFamilies:
    def test_so2n_degree_one_is_trace_family(self, rng):
        p = random_point(special_orthogonal(2), rng)
        a = so2n_degree_d(1, [1], 1).field(p)
        b = so_trace_family(2, [1, 0], [1, 1j]).field(p)
        assert a == pytest.approx(b, abs=1e-15)

    def test_so2n_derivative_formula(self, rng):
        n, d, a = 2, 2, np.array([1.0, 0.5 - 1j])
        e = so2n_degree_d(n, a, d)
        names = [nm for nm, _ in e.spec.lie_basis]
        for _ in range(5):
            p = random_point(e.spec, rng)
            coeffs = gradient(e.field, p)
            x = p.ambient
            for k in range(1, n + 1):
                w = x[0, 2 * k - 2] + 1j * x[0, 2 * k - 1]
                expected = 1j * a[k - 1] * d / math.sqrt(2) * w**d
                assert coeffs[names.index(f"Y{2 * k - 1}{2 * k}")] == pytest.approx(expected, abs=1e-7)

    def test_so2n_rejects_zero_coefficient(self):
        with pytest.raises(ZeroCoefficient):
            so2n_degree_d(2, [1, 0], 2)

    def test_u_minor(self):
        e = u_minor(3)
        assert e.field(np.eye(3)) == 1
        assert e.predicted == EigenData(-4, -2)
        with pytest.raises(ValueError):
            u_minor(2)

    def test_u_first_row(self, rng):
        e = u_first_row_degree_d(2, [1, 1j], 2)
        assert e.predicted == EigenData(-2, -1).polynomial(2)
        fit, _ = estimate_eigenpair(e.field, e.spec, 20, rng)
        assert abs(fit.lam - e.predicted.lam) <= 1e-4 and abs(fit.mu - e.predicted.mu) <= 1e-4

    def test_sp_z11_never_critical(self, rng):
        e = sp_z11(2)
        smallest = min(
            np.linalg.svd(real_jacobian(e.field, random_point(e.spec, rng)), compute_uv=False)[-1]
            for _ in range(50)
        )
        assert smallest > 1e-3


def test_family_members_share_constants():
    for fid, spec in [("SphereBasic", sphere(3)), ("CPBasic", complex_projective(3)),
                      ("SOTrace", special_orthogonal(4)), ("UTrace", unitary(2))]:
        members = family_members(fid, spec)
        assert members and len({m.predicted for m in members}) == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_polynomial_prediction_formula(seed):
    r = np.random.default_rng(seed)
    lam, mu = complex(*r.standard_normal(2)), float(r.standard_normal())
    d = int(r.integers(0, 5))
    got = EigenData(lam, mu).polynomial(d)
    assert got == EigenData(d * lam + d * (d - 1) * mu, d * d * mu)
