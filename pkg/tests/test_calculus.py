import math

import numpy as np
import pytest

from eigenfibre.calculus import (
    ScalarField,
    conformality,
    coordinate_derivative_rules,
    dphi_norm_sq,
    estimate_eigenpair,
    first_fundamental_eigenvalues,
    gradient,
    gradient_vector,
    p_tension,
    product_rule_check,
    tension,
)
from eigenfibre.catalog import (
    family_members,
    matrix_coordinate,
    so_trace_family,
    sphere_basic,
    u_minor,
    u_trace_family,
)
from eigenfibre.errors import DegeneratePoint, InsufficientSamples, PhaseDependentField
from eigenfibre.fibres import find_fibre_point
from eigenfibre.manifolds import (
    ManifoldPoint,
    complex_projective,
    complex_to_sphere,
    quaternionic_unitary,
    random_point,
    special_orthogonal,
    sphere,
    unitary,
)
from eigenfibre.numerics import gram_schmidt

S3 = sphere(2)
NORTH = ManifoldPoint(S3, complex_to_sphere([1, 0]))
PHI1 = sphere_basic(2, 1).field


def const(spec, value=2.5 - 1j):
    return ScalarField.constant(spec, value)


class TestScalarField:
    def test_arithmetic(self, rng):
        p = random_point(S3, rng)
        f, g = PHI1, sphere_basic(2, 2).field
        z1, z2 = f(p), g(p)
        assert (f + g)(p) == z1 + z2
        assert (f - 2)(p) == z1 - 2
        assert (3 - f)(p) == 3 - z1
        assert (f * g)(p) == z1 * z2
        assert (f / 2)(p) == z1 / 2
        assert (f**3)(p) == z1**3
        assert (-f)(p) == -z1
        assert f.conj()(p) == np.conj(z1)
        assert f.real()(p) == z1.real and f.imag()(p) == z1.imag

    def test_mixed_manifolds_rejected(self):
        with pytest.raises(ValueError):
            PHI1 + const(unitary(2))

    def test_cp_fields_must_be_phase_invariant(self):
        with pytest.raises(PhaseDependentField):
            ScalarField(complex_projective(1), lambda z: z[0] / np.linalg.norm(z), "bad")


class TestGradient:
    @pytest.mark.parametrize("spec", [S3, unitary(2), quaternionic_unitary(2)], ids=str)
    def test_constant(self, spec, rng):
        p = random_point(spec, rng)
        assert np.all(gradient(const(spec), p) == 0)

    def test_so_coordinate_rule(self, rng):
        spec = special_orthogonal(4)
        p = random_point(spec, rng)
        coeffs = gradient(matrix_coordinate(spec, 1, 1), p)
        assert coeffs[0] == pytest.approx(-p.ambient[0, 1] / math.sqrt(2), abs=1e-8)

    def test_u_diagonal_rule(self, rng):
        spec = unitary(3)
        p = random_point(spec, rng)
        names = [nm for nm, _ in spec.lie_basis]
        for j, alpha, t in [(1, 1, 1), (2, 3, 3), (2, 3, 1)]:
            coeffs = gradient(matrix_coordinate(spec, j, alpha), p)
            expected = 1j * p.ambient[j - 1, alpha - 1] * (alpha == t)
            assert coeffs[names.index(f"iD{t}")] == pytest.approx(expected, abs=1e-8)

    def test_gradient_vectors_are_tangent(self, rng):
        p = random_point(S3, rng)
        gu, gv = gradient_vector(PHI1, p)
        assert abs(np.dot(gu, p.ambient)) <= 1e-12 and abs(np.dot(gv, p.ambient)) <= 1e-12

    def test_normal_pair_matches_hand_formula(self, rng):
        # N2 is proportional to |grad u|^2 grad v - (mu u v) grad u
        p = random_point(S3, rng)
        gu, gv = gradient_vector(PHI1, p)
        u, v = PHI1(p).real, PHI1(p).imag
        _, n2 = gram_schmidt([gu, gv])
        direct = np.dot(gu, gu) * gv - (-1.0) * u * v * gu
        direct /= np.linalg.norm(direct)
        assert abs(abs(np.dot(n2, direct)) - 1.0) <= 1e-9


@pytest.mark.parametrize("spec", [special_orthogonal(3), special_orthogonal(4), unitary(2), unitary(3),
                                  quaternionic_unitary(2)], ids=str)
def test_coordinate_rules_match_numeric_derivatives(spec, rng):
    names = [nm for nm, _ in spec.lie_basis]
    worst = 0.0
    for _ in range(20):
        p = random_point(spec, rng)
        for j in range(1, spec.n + 1):
            for alpha in range(1, spec.n + 1):
                coeffs = gradient(matrix_coordinate(spec, j, alpha), p)
                for name, value in coordinate_derivative_rules(spec, p.ambient, j, alpha).items():
                    worst = max(worst, abs(coeffs[names.index(name)] - value))
    assert worst <= 1e-8


def test_coordinate_rules_need_a_group():
    with pytest.raises(ValueError):
        coordinate_derivative_rules(S3, NORTH.ambient, 1, 1)


class TestTension:
    def test_sphere_basic_at_north_pole(self):
        assert tension(PHI1, NORTH) == pytest.approx(-3.0, abs=1e-5)

    @pytest.mark.parametrize("spec", [S3, complex_projective(2), special_orthogonal(3), unitary(2)], ids=str)
    def test_constant(self, spec, rng):
        assert abs(tension(const(spec), random_point(spec, rng))) <= 1e-9

    def test_u2_coordinate_at_identity(self):
        spec = unitary(2)
        assert tension(matrix_coordinate(spec, 1, 1), ManifoldPoint(spec, np.eye(2))) == pytest.approx(-2, abs=1e-5)


class TestConformality:
    def test_sphere_basic_at_north_pole(self):
        assert conformality(PHI1, PHI1, NORTH) == pytest.approx(-1.0, abs=1e-7)

    def test_constant_partner(self, rng):
        assert conformality(PHI1, const(S3), random_point(S3, rng)) == 0

    def test_unitary_conjugate_pairing(self):
        spec = unitary(2)
        z11 = matrix_coordinate(spec, 1, 1)
        got = conformality(z11, z11.conj(), ManifoldPoint(spec, np.eye(2)))
        assert got == pytest.approx(1.0, abs=1e-7)

    def test_is_bilinear_not_sesquilinear(self, rng):
        p = random_point(S3, rng)
        g = sphere_basic(2, 2).field
        assert conformality(PHI1, 1j * g, p) == pytest.approx(1j * conformality(PHI1, g, p), abs=1e-12)


class TestDphi:
    def test_constant(self, rng):
        assert dphi_norm_sq(const(S3), random_point(S3, rng)) == 0

    def test_north_pole(self):
        assert dphi_norm_sq(PHI1, NORTH) == pytest.approx(1.0, abs=1e-7)

    def test_zero_fibre_relation(self, rng):
        entry = so_trace_family(4, [1, 0, 0, 0], [1, 1j, 0, 0])
        for _ in range(3):
            fp = find_fibre_point(entry.field, 0, rng=rng)
            data = first_fundamental_eigenvalues(entry.field, fp.point)
            norm = dphi_norm_sq(entry.field, fp.point)
            assert norm == pytest.approx(2 * data.lam1, abs=2e-7)
            assert norm == pytest.approx(2 * data.lam2, abs=2e-7)


class TestPTension:
    def test_p2_is_tension(self, rng):
        p = random_point(S3, rng)
        assert p_tension(PHI1, p, 2) == tension(PHI1, p)

    def test_zero_fibre_of_eigenfunction(self, rng):
        fp = find_fibre_point(PHI1, 0, rng=rng)
        assert abs(p_tension(PHI1, fp.point, 2)) <= 1e-5

    def test_constant_differential_norm(self, rng):
        # |d z11|^2 = kappa(z11, conj z11) = 1 on U(n)
        spec = unitary(2)
        z11 = matrix_coordinate(spec, 1, 1)
        for _ in range(3):
            p = random_point(spec, rng)
            norm = dphi_norm_sq(z11, p)
            assert norm == pytest.approx(1.0, abs=1e-9)
            assert p_tension(z11, p, 4) == pytest.approx(norm * tension(z11, p), abs=1e-4)

    def test_p4_on_sphere_has_gradient_correction(self, rng):
        p = random_point(S3, rng)
        assert abs(p_tension(PHI1, p, 4) - dphi_norm_sq(PHI1, p) * tension(PHI1, p)) > 1e-3

    def test_critical_point(self):
        with pytest.raises(DegeneratePoint):
            p_tension(const(S3), NORTH, 4)

    def test_bad_exponent(self, rng):
        with pytest.raises(ValueError):
            p_tension(PHI1, random_point(S3, rng), 1.0)


class TestFirstFundamentalForm:
    def test_closed_form(self, rng):
        for _ in range(20):
            data = first_fundamental_eigenvalues(PHI1, random_point(S3, rng))
            if data.degenerate:
                continue
            c1, c2 = data.closed_form(-1.0)
            assert data.lam1 == pytest.approx(c1, abs=1e-6)
            assert data.lam2 == pytest.approx(c2, abs=1e-6)

    def test_zero_fibre_is_conformal(self, rng):
        fp = find_fibre_point(PHI1, 0, rng=rng)
        data = first_fundamental_eigenvalues(PHI1, fp.point)
        assert abs(data.lam1 - data.lam2) <= 1e-8

    def test_degenerate_at_north_pole(self):
        assert first_fundamental_eigenvalues(PHI1, NORTH).degenerate


class TestEstimate:
    def test_sphere(self, rng):
        fit, res = estimate_eigenpair(PHI1, S3, 20, rng)
        assert fit.lam == pytest.approx(-3, abs=1e-4)
        assert fit.mu == pytest.approx(-1, abs=1e-4)
        assert res["lambda"] <= 1e-4 and res["mu"] <= 1e-4

    def test_so4_trace_family(self, rng):
        entry = so_trace_family(4, [1, 0, 0, 0], [1, 1j, 0, 0])
        fit, _ = estimate_eigenpair(entry.field, entry.spec, 20, rng)
        assert fit.lam == pytest.approx(-1.5, abs=1e-4)
        assert fit.mu == pytest.approx(-0.5, abs=1e-4)

    def test_u3_minor(self, rng):
        entry = u_minor(3)
        fit, _ = estimate_eigenpair(entry.field, entry.spec, 20, rng)
        assert fit.lam == pytest.approx(-4, abs=1e-4)
        assert fit.mu == pytest.approx(-2, abs=1e-4)

    def test_zero_field(self, rng):
        with pytest.raises(InsufficientSamples):
            estimate_eigenpair(const(S3, 0), S3, 20, rng)

    def test_too_few_samples(self, rng):
        with pytest.raises(ValueError):
            estimate_eigenpair(PHI1, S3, 9, rng)


class TestProductRule:
    def test_constant_factor(self, rng):
        p = random_point(S3, rng)
        assert product_rule_check(PHI1, const(S3), p) <= 1e-9
        assert product_rule_check(const(S3), PHI1, p) <= 1e-9

    def test_random_unitary_pairs(self, rng):
        spec = unitary(2)
        pool = [m.field for m in family_members("UTrace", spec)]
        pool += [f.conj() for f in pool] + [u_trace_family(2, [0, 1], [1, 1j]).field]
        for _ in range(10):
            i, j = rng.integers(0, len(pool), 2)
            p = random_point(spec, rng)
            assert product_rule_check(pool[i], pool[j], p) <= 1e-4

    def test_square(self, rng):
        p = random_point(S3, rng)
        lhs = tension(PHI1 * PHI1, p)
        rhs = 2 * PHI1(p) * tension(PHI1, p) + 2 * conformality(PHI1, PHI1, p)
        assert lhs == pytest.approx(rhs, abs=1e-4)
