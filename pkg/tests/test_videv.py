import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from curvlab.errors import DomainError, IndeterminateVerdictError, NotSelfAdjointError
from curvlab.expr import parse_expr
from curvlab.linalg import spectral_profile
from curvlab.models import Model, canonical_model, double_model, random_model
from curvlab.videv import (
    PROPERTY_NAMES, alpha_constancy, alpha_invariant, check_condition_a, check_einstein,
    check_jacobi_tsankov, check_jacobi_videv, check_mixed_tsankov, check_pseudo_einstein,
    check_skew_videv, condition_a_residual, normalized_basis_thm13, property_report,
)


def _perturbed(eps):
    base = canonical_model(np.eye(3), 1.0)
    return Model(np.eye(3), base.A + eps * random_model(1, 3).A)


def _verdict_or_none(fn, *args, **kw):
    try:
        return fn(*args, **kw).verdict
    except IndeterminateVerdictError:
        return None


class TestEinstein:
    def test_multiple_of_identity(self):
        assert check_einstein(3.0 * np.eye(4)).verdict

    def test_not_einstein(self):
        r = check_einstein(np.diag([1.0, 2.0, 3.0]))
        assert not r.verdict
        assert r.witness in {(0, 0), (2, 2)}

    def test_dead_zone(self):
        with pytest.raises(IndeterminateVerdictError) as info:
            check_einstein(np.eye(3) + np.diag([1e-6, 0.0, 0.0]))
        assert info.value.tol == 1e-8
        assert info.value.fail_threshold == 1e-4


class TestPseudoEinstein:
    def test_single_real_eigenvalue(self):
        assert check_pseudo_einstein(spectral_profile(2.0 * np.eye(3))).verdict

    def test_conjugate_pair(self):
        rot = np.kron(np.eye(2), np.array([[1.0, -2.0], [2.0, 1.0]]))
        assert check_pseudo_einstein(spectral_profile(rot)).verdict

    def test_jordan_block_with_single_eigenvalue(self):
        t = 2.0 * np.eye(3) + np.diag(np.ones(2), k=1)
        assert check_pseudo_einstein(spectral_profile(t)).verdict

    def test_nilpotent(self):
        assert check_pseudo_einstein(spectral_profile(np.diag(np.ones(3), k=1))).verdict

    def test_two_real_eigenvalues(self):
        assert not check_pseudo_einstein(spectral_profile(np.diag([1.0, 2.0]))).verdict

    def test_two_pairs(self):
        t = np.zeros((4, 4))
        t[:2, :2] = [[0.0, -1.0], [1.0, 0.0]]
        t[2:, 2:] = [[0.0, -3.0], [3.0, 0.0]]
        assert not check_pseudo_einstein(spectral_profile(t)).verdict


class TestVidev:
    @pytest.mark.parametrize("n, c", [(2, 1.0), (3, -2.0), (4, 0.5)])
    def test_einstein_implies_videv(self, n, c):
        m = canonical_model(np.eye(n), c)
        assert check_jacobi_videv(m).verdict
        assert check_skew_videv(m).verdict
        assert check_condition_a(m).verdict

    def test_constant_curvature_is_not_tsankov(self):
        # [J(x), J(y)] = c^2 <x, y> (x y^t - y x^t), nonzero for non-orthogonal x, y
        m = canonical_model(np.eye(3), 1.0)
        r = check_jacobi_tsankov(m)
        assert not r.verdict
        assert r.residual == pytest.approx(0.5)
        assert not check_mixed_tsankov(m).verdict
        x, y = np.array([1.0, 0.0, 0.0]), np.array([1.0, 1.0, 0.0])
        comm = m.jacobi(x) @ m.jacobi(y) - m.jacobi(y) @ m.jacobi(x)
        assert_allclose(comm, np.outer(x, y) - np.outer(y, x), atol=1e-14)

    def test_flat_model_is_tsankov(self):
        m = Model(np.diag([-1.0, 1.0, 1.0]), np.zeros((3,) * 4))
        assert check_jacobi_tsankov(m).verdict
        assert check_mixed_tsankov(m).verdict

    def test_dead_zone_is_reported(self):
        with pytest.raises(IndeterminateVerdictError):
            check_jacobi_videv(_perturbed(1e-6))

    def test_clear_verdicts_either_side(self):
        assert check_jacobi_videv(_perturbed(1e-10)).verdict
        assert not check_jacobi_videv(_perturbed(1e-2)).verdict

    def test_scale_invariance(self):
        m = random_model(3, 4)
        small = Model(m.metric, 1e-3 * m.A)
        assert check_jacobi_videv(small).residual == pytest.approx(check_jacobi_videv(m).residual, rel=1e-9)
        assert check_jacobi_tsankov(small).residual == pytest.approx(check_jacobi_tsankov(m).residual, rel=1e-9)

    def test_witness_points_at_a_nonzero_commutator(self):
        m = _perturbed(1e-2)
        r = check_jacobi_videv(m)
        i, j, row, col = r.witness
        J = m.jacobi_operators()[i, j]
        rho = m.ricci_op()
        assert abs((J @ rho - rho @ J)[row, col]) > 0

    def test_explicit_T(self):
        m = random_model(0, 3)
        assert check_jacobi_videv(m, T=np.eye(3)).verdict
        assert check_condition_a(m, T=2.0 * np.eye(3)).verdict

    def test_non_self_adjoint_T(self):
        m = random_model(0, 3)
        with pytest.raises(NotSelfAdjointError):
            condition_a_residual(m, T=np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))

    def test_self_adjoint_for_indefinite_metric(self):
        m = random_model(0, 3, (1, 2))
        S = np.array([[1.0, 0.3, 0.0], [0.3, 2.0, 0.1], [0.0, 0.1, -1.0]])
        T = m.metric_inv @ S
        condition_a_residual(m, T=T)


class TestEquivalences:
    """Condition on A, skew-Videv and Jacobi-Videv agree; so do the two Tsankov notions."""

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(2, 5))
    def test_on_random_models(self, seed, n):
        p = seed % (n + 1)
        m = random_model(seed, n, (p, n - p))
        verdicts = {_verdict_or_none(f, m) for f in (check_condition_a, check_skew_videv, check_jacobi_videv)}
        verdicts.discard(None)
        assert len(verdicts) <= 1
        tsankov = {_verdict_or_none(check_jacobi_tsankov, m), _verdict_or_none(check_mixed_tsankov, m)}
        tsankov.discard(None)
        assert len(tsankov) <= 1

    def test_on_doubled_models(self):
        for n in (2, 3):
            m = double_model(canonical_model(np.eye(n), 1.0))
            assert check_condition_a(m).verdict and check_skew_videv(m).verdict
            assert not check_jacobi_tsankov(m).verdict and not check_mixed_tsankov(m).verdict


class TestPropertyReport:
    def test_keys(self):
        results, profile = property_report(random_model(2, 4))
        assert set(results) == set(PROPERTY_NAMES)
        assert profile.n == 4

    def test_indeterminate_entries_are_kept(self):
        results, _ = property_report(_perturbed(1e-6))
        assert isinstance(results["jacobi_videv"], IndeterminateVerdictError)
        assert set(results) == set(PROPERTY_NAMES)


class TestNormalizedBasis:
    @pytest.mark.parametrize("phi, y, eps1, delta1, alpha", [
        ("exp(x1)", 0.0, 1.0, 0.5, 1.0),
        ("x1^2", 1.0, 0.5, 1.0, 1.0),
        ("exp(2*x1)", 0.3, 0.25 * np.exp(-0.6), 0.5 * np.exp(0.6), 0.25),
    ])
    def test_closed_forms(self, phi, y, eps1, delta1, alpha):
        nb = normalized_basis_thm13(parse_expr(phi, 4), {}, [0.2, y, -0.1, 0.4])
        assert nb.eps1 == pytest.approx(eps1, rel=1e-14)
        assert nb.delta1 == pytest.approx(delta1, rel=1e-14)
        assert nb.alpha == pytest.approx(alpha, rel=1e-12)
        assert nb.max_relation_error <= 1e-12

    def test_relations_listed(self):
        nb = normalized_basis_thm13(parse_expr("x1^3 + x1^2", 4), {}, [0.0, 0.4, 0.0, 0.0])
        assert set(nb.relations) == {"g(X,Xbar)", "g(Y,Y)", "g(Z,Z)", "R(X,Y,Y,X)", "R(Y,Z,Z,Y)",
                                     "R(Y,X,X,Z)", "R(X,Y,Y,Z)", "R(X,Z,Z,Y)"}
        assert nb.relations["R(X,Y,Y,Z)"][1] == -1.0
        assert nb.max_relation_error <= 1e-12

    @pytest.mark.parametrize("phi", ["x1^3 + x1^2", "exp(x1) + x1^4", "sin(x1) + 3*x1^2"])
    def test_basis_alpha_matches_invariant(self, phi):
        e = parse_expr(phi, 4)
        for y in (0.2, 0.5, 0.9):
            nb = normalized_basis_thm13(e, {}, [0.0, y, 0.0, 0.0])
            assert nb.alpha == pytest.approx(alpha_invariant(e, {}, y), rel=1e-11)

    def test_alpha_far_from_origin(self):
        assert alpha_invariant(parse_expr("exp(x1)", 4), {}, 17.0) == pytest.approx(1.0, rel=1e-14)

    def test_vanishing_second_derivative(self):
        with pytest.raises(DomainError):
            normalized_basis_thm13(parse_expr("x1^3", 4), {}, [0.0, 0.0, 0.0, 0.0])
        with pytest.raises(DomainError):
            alpha_invariant(parse_expr("x1", 4), {}, 0.5)


class TestAlphaConstancy:
    def test_exponential_is_constant(self):
        e = parse_expr("exp(b*x1)", 4, params=["b"])
        assert alpha_constancy(e, {"b": 1.7}, np.linspace(-1, 1, 11)).verdict

    def test_polynomial_is_not(self):
        e = parse_expr("x1^3 + x1^2", 4)
        r = alpha_constancy(e, {}, np.linspace(0.05, 1, 11))
        assert not r.verdict
        assert r.residual > 1e-3
