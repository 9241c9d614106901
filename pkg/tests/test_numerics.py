import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from eigenfibre.errors import DegenerateInput
from eigenfibre.numerics import (
    FIRST_DERIVATIVE,
    SECOND_DERIVATIVE,
    Stencil,
    diff_along_curve,
    eig_sym2,
    gram_schmidt,
    haar_sample,
    hermitian,
    make_rng,
    matrix_exp,
    skew_exp_factory,
    split_rng,
    stencil_derivative,
    symmetric,
    uniform_sphere_point,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestGramSchmidt:
    def test_orthonormal_input_is_unchanged(self):
        out = gram_schmidt([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        np.testing.assert_allclose(out, np.eye(2), atol=1e-15)

    def test_one_elimination_step(self):
        out = gram_schmidt([np.array([1.0, 0.0]), np.array([1.0, 1.0])])
        np.testing.assert_allclose(out, np.eye(2), atol=1e-15)

    def test_dependent_vectors_rejected(self):
        with pytest.raises(DegenerateInput):
            gram_schmidt([np.array([1.0, 2.0]), np.array([2.0, 4.0])])

    def test_complex_matrices_use_real_trace_form(self, rng):
        vecs = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3)]
        out = gram_schmidt(vecs)
        gram = [[np.real(np.trace(a @ b.conj().T)) for b in out] for a in out]
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_gram_matrix_is_identity(self, k, seed):
        r = np.random.default_rng(seed)
        vecs = list(r.standard_normal((k, 8)))
        out = np.array(gram_schmidt(vecs))
        np.testing.assert_allclose(out @ out.T, np.eye(k), atol=1e-12)


class TestEigSym2:
    def test_identity(self):
        assert eig_sym2(1.0, 0.0, 1.0) == (1.0, 1.0)

    def test_diagonal(self):
        assert eig_sym2(0.0, 0.0, 1.0) == (0.0, 1.0)

    @given(finite, finite, finite)
    def test_matches_lapack(self, a, b, c):
        ref = np.linalg.eigvalsh(np.array([[a, b], [b, c]]))
        got = eig_sym2(a, b, c)
        scale = max(1.0, abs(a), abs(b), abs(c))
        assert got[0] <= got[1]
        np.testing.assert_allclose(got, ref, atol=1e-12 * scale)


class TestMatrixExp:
    def test_zero(self):
        np.testing.assert_array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_rotation(self):
        t = 0.7
        got = matrix_exp(np.array([[0.0, t], [-t, 0.0]]))
        np.testing.assert_allclose(got, [[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]], atol=1e-15)

    def test_skew_hermitian_gives_unitary(self, rng):
        h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        x = h - h.conj().T
        u = matrix_exp(x)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            matrix_exp(np.zeros((2, 3)))

    def test_skew_factory_agrees_with_expm(self, rng):
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        x = h - h.conj().T
        exp_t = skew_exp_factory(x)
        for t in (-0.3, 0.0, 0.01, 1.7):
            np.testing.assert_allclose(exp_t(t), matrix_exp(t * x), atol=1e-13)

    def test_skew_factory_real_input_stays_real(self):
        y = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert np.isrealobj(skew_exp_factory(y)(0.4))


class TestStencil:
    def test_weights(self):
        np.testing.assert_allclose(Stencil(1, 5, 1.0).weights, [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12], atol=1e-14)
        np.testing.assert_allclose(Stencil(2, 5, 1.0).weights, [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12], atol=1e-13)

    def test_exactness_degree(self):
        assert Stencil(1, 5).exactness_degree == 4
        assert Stencil(2, 5).exactness_degree == 5
        assert Stencil(2, 3).exactness_degree == 3

    @pytest.mark.parametrize("order", [1, 2])
    def test_exact_on_polynomials(self, order):
        s = Stencil(order, 5, 0.1)
        for k in range(s.exactness_degree + 1):
            got = stencil_derivative(lambda t: (t + 0.3) ** k, s)
            exact = k * 0.3 ** (k - 1) if order == 1 else k * (k - 1) * 0.3 ** max(k - 2, 0)
            if k < order:
                exact = 0.0
            assert got == pytest.approx(exact, abs=1e-10)

    @pytest.mark.parametrize("kwargs", [dict(order=3), dict(order=1, points=4), dict(order=1, step=0.0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            Stencil(**kwargs)

    def test_constant(self):
        assert stencil_derivative(lambda t: 5.0, FIRST_DERIVATIVE) == 0.0
        assert stencil_derivative(lambda t: 5.0, SECOND_DERIVATIVE) == 0.0

    def test_linear_function_along_line(self):
        p, v, a = np.array([1.0, 2.0]), np.array([0.5, -1.0]), np.array([3.0, 4.0])
        got = diff_along_curve(lambda t: p + t * v, lambda x: a @ x, FIRST_DERIVATIVE)
        # exact up to rounding: eps * |f| / h is about 1e-11 here
        assert got == pytest.approx(a @ v, abs=1e-10)

    def test_sine_second_derivative(self):
        assert abs(stencil_derivative(math.sin, SECOND_DERIVATIVE)) <= 1e-8

    def test_array_valued(self):
        got = stencil_derivative(lambda t: np.array([t, t**2, math.exp(t)]), FIRST_DERIVATIVE)
        np.testing.assert_allclose(got, [1.0, 0.0, 1.0], atol=1e-10)


class TestMatrices:
    def test_hermitian_and_symmetric(self):
        hermitian(np.array([[1.0, 1j], [-1j, 2.0]]))
        symmetric(np.eye(2))
        with pytest.raises(ValueError):
            hermitian(np.array([[1.0, 1j], [1j, 2.0]]))
        with pytest.raises(ValueError):
            symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestRandomness:
    def test_split_is_deterministic(self):
        a = [g.standard_normal(3) for g in split_rng(make_rng(1), 3)]
        b = [g.standard_normal(3) for g in split_rng(make_rng(1), 3)]
        np.testing.assert_array_equal(a, b)
        assert not np.allclose(a[0], a[1])

    def test_so3_sample(self, rng):
        x = haar_sample("so", 3, rng)
        np.testing.assert_allclose(x @ x.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(x) == pytest.approx(1.0, abs=1e-12)

    def test_sp2_block_form(self, rng):
        q = haar_sample("sp", 2, rng)
        z, w = q[:2, :2], q[:2, 2:]
        np.testing.assert_array_equal(q[2:, :2], -w.conj())
        np.testing.assert_array_equal(q[2:, 2:], z.conj())
        np.testing.assert_allclose(q @ q.conj().T, np.eye(4), atol=1e-12)

    def test_u2_reproducible(self):
        a = haar_sample("u", 2, make_rng(3))
        b = haar_sample("u", 2, make_rng(3))
        c = haar_sample("u", 2, make_rng(4))
        np.testing.assert_array_equal(a, b)
        assert not np.allclose(a, c)

    def test_unknown_group(self, rng):
        with pytest.raises(ValueError):
            haar_sample("gl", 2, rng)
        with pytest.raises(ValueError):
            haar_sample("so", 1, rng)

    def test_haar_u1_phase_is_uniform(self, rng):
        phases = np.array([np.angle(haar_sample("u", 1, rng)[0, 0]) for _ in range(4000)])
        assert stats.kstest((phases + math.pi) / (2 * math.pi), "uniform").pvalue > 0.01

    def test_sphere_point_norm(self, rng):
        x = uniform_sphere_point(5, rng)
        assert x.shape == (6,)
        assert abs(np.linalg.norm(x) - 1.0) <= 1e-15

    def test_sphere_point_mean_is_zero(self, rng):
        n = 100_000
        pts = np.array([uniform_sphere_point(3, rng) for _ in range(n)])
        # each coordinate has variance 1/4 on S^3
        se = math.sqrt(0.25 / n)
        assert np.all(np.abs(pts.mean(axis=0)) <= 3 * se)

    def test_circle_angles_uniform(self, rng):
        pts = np.array([uniform_sphere_point(1, rng) for _ in range(10_000)])
        ang = np.arctan2(pts[:, 1], pts[:, 0])
        assert stats.kstest((ang + math.pi) / (2 * math.pi), "uniform").pvalue > 0.01
