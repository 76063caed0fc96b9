import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from curvlab.curvature import curvature_at
from curvlab.errors import ModelError, NotEinsteinError
from curvlab.families import build_thm13
from curvlab.models import (
    Model, canonical_model, double_model, einstein_constant, model_at, random_model, validate,
)
from curvlab.videv import check_jacobi_tsankov, check_jacobi_videv, check_mixed_tsankov


def _brute_force_jacobi(model, x):
    """J(x) y = R(y, x) x straight from A: g(J(x) y, w) = A(y, x, x, w)."""
    lower = np.einsum("cijw,i,j->wc", model.A, x, x)
    return model.metric_inv @ lower


class TestModel:
    def test_json_round_trip(self):
        m = random_model(7, 4, (1, 3))
        back = Model.from_json(m.to_json())
        assert_allclose(back.metric, m.metric, rtol=0, atol=0)
        assert_allclose(back.A, m.A, rtol=0, atol=0)

    def test_from_dict_errors(self):
        with pytest.raises(ModelError):
            Model.from_dict({"n": 2, "metric": np.eye(2).tolist()})
        with pytest.raises(ModelError):
            Model.from_dict({"n": 2, "metric": np.eye(2).tolist(), "A": [0.0] * 15})

    def test_shape_and_symmetry_errors(self):
        with pytest.raises(ModelError):
            Model(np.eye(2), np.zeros((3, 3, 3, 3)))
        with pytest.raises(ModelError):
            Model(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros((2,) * 4))

    def test_arrays_are_read_only(self):
        m = random_model(0, 3)
        with pytest.raises(ValueError):
            m.A[0, 0, 0, 0] = 1.0

    @pytest.mark.parametrize("seed, n, sig", [(0, 3, None), (1, 4, (2, 2)), (2, 5, (1, 4))])
    def test_jacobi_matches_brute_force(self, seed, n, sig, rng):
        m = random_model(seed, n, sig)
        x = rng.normal(size=n)
        assert_allclose(m.jacobi(x), _brute_force_jacobi(m, x), atol=1e-12)

    def test_ricci_is_trace_of_jacobi(self, rng):
        m = random_model(3, 4, (1, 3))
        x = rng.normal(size=4)
        assert x @ m.ricci_form() @ x == pytest.approx(np.trace(m.jacobi(x)), rel=1e-12)


class TestValidate:
    def test_random_models_are_valid(self):
        for seed in range(5):
            assert all(r.ok for r in validate(random_model(seed, 4).A))

    def test_detects_each_symmetry(self, rng):
        A = random_model(0, 3).A.copy()
        A[0, 1, 2, 0] += 0.1
        bad = {r.name for r in validate(A) if not r.ok}
        assert bad == {"antisymmetry", "pair_symmetry", "first_bianchi"}

    def test_bianchi_only(self):
        # antisymmetric in (0,1), (2,3), pair symmetric, but not Bianchi
        A = np.zeros((4,) * 4)
        for i, j, k, l, s in [(0, 1, 2, 3, 1), (1, 0, 2, 3, -1), (0, 1, 3, 2, -1), (1, 0, 3, 2, 1)]:
            A[i, j, k, l] = A[k, l, i, j] = s
        res = {r.name: r for r in validate(A)}
        assert res["antisymmetry"].ok and res["pair_symmetry"].ok
        assert not res["first_bianchi"].ok

    def test_model_at_chart_point_is_valid(self):
        m = model_at(build_thm13("exp(x1)"), [0.0, 0.3, 0.0, 0.0])
        assert all(r.ok for r in validate(m.A))


class TestCanonical:
    @pytest.mark.parametrize("n", [2, 3, 5])
    @pytest.mark.parametrize("c", [1.0, -0.5, 2.0])
    def test_constant_curvature_ricci(self, n, c):
        m = canonical_model(np.eye(n), c)
        assert_allclose(m.ricci_op(), c * (n - 1) * np.eye(n), atol=1e-14)
        assert einstein_constant(m) == pytest.approx(c * (n - 1))

    def test_jacobi_of_unit_vector(self):
        m = canonical_model(np.eye(3), 2.0)
        x = np.array([1.0, 0.0, 0.0])
        # J(x) y = c (y - <x, y> x)
        assert_allclose(m.jacobi(x), 2.0 * np.diag([0.0, 1.0, 1.0]), atol=1e-14)

    def test_asymmetric_phi(self):
        with pytest.raises(ModelError):
            canonical_model(np.array([[1.0, 1.0], [0.0, 1.0]]), 1.0)

    def test_not_einstein(self):
        with pytest.raises(NotEinsteinError):
            einstein_constant(canonical_model(np.diag([1.0, 2.0, 3.0]), 1.0))


class TestRandom:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(2, 6))
    def test_deterministic(self, seed, n):
        a, b = random_model(seed, n), random_model(seed, n)
        assert_allclose(a.A, b.A, rtol=0, atol=0)

    def test_signature(self):
        assert random_model(0, 4, (1, 3)).signature == (1, 3)

    def test_bad_signature(self):
        with pytest.raises(ValueError):
            random_model(0, 4, (1, 1))


class TestDouble:
    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("c", [1.0, 2.0, -1.0])
    def test_properties(self, n, c):
        m0 = canonical_model(np.eye(n), c)
        s = c * (n - 1)
        m1 = double_model(m0)
        assert m1.n == 2 * n
        assert m1.signature == (n, n)
        assert all(r.ok for r in validate(m1.A))
        rho = m1.ricci_op()
        assert_allclose(rho @ rho, -4 * s * s * np.eye(2 * n), atol=1e-12)
        assert check_jacobi_videv(m1).verdict

    def test_not_jacobi_tsankov(self):
        # the doubled model is Jacobi-Videv but its Jacobi operators do not commute
        m1 = double_model(canonical_model(np.eye(3), 1.0))
        jt = check_jacobi_tsankov(m1)
        mt = check_mixed_tsankov(m1)
        assert not jt.verdict and not mt.verdict
        assert jt.residual == pytest.approx(0.5)
        assert mt.residual == pytest.approx(1.0)
        J = m1.jacobi_operators()
        comm = J[0, 0] @ J[0, 1] - J[0, 1] @ J[0, 0]
        assert np.max(np.abs(comm)) > 0.1

    def test_block_structure(self):
        m0 = canonical_model(np.eye(2), 1.0)
        m1 = double_model(m0)
        n = 2
        # entries with an even number of minus slots vanish
        assert not np.any(m1.A[:n, :n, :n, :n])
        assert not np.any(m1.A[n:, n:, :n, :n])
        assert_allclose(m1.A[n:, :n, :n, :n], m0.A)
        assert_allclose(m1.A[n:, n:, n:, :n], -m0.A)

    def test_requires_identity_metric(self):
        m0 = canonical_model(np.eye(2), 1.0, metric=np.diag([1.0, 2.0]))
        with pytest.raises(ModelError):
            double_model(m0)
        m0 = canonical_model(np.eye(2), 1.0, metric=np.diag([-1.0, 1.0]))
        with pytest.raises(ModelError):
            double_model(m0)

    def test_requires_einstein(self):
        with pytest.raises(NotEinsteinError):
            double_model(canonical_model(np.diag([1.0, 2.0, 3.0]), 1.0))

    def test_requires_valid_tensor(self):
        A = canonical_model(np.eye(2), 1.0).A.copy()
        A[0, 0, 0, 0] = 1.0
        with pytest.raises(ModelError):
            double_model(Model(np.eye(2), A))


def test_model_at_matches_curvature(sphere):
    m = model_at(sphere, [0.7, 0.1])
    cd = curvature_at(sphere, [0.7, 0.1])
    assert_allclose(m.ricci_op(), cd.ricci_op, atol=1e-14)
