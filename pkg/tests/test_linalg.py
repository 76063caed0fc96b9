import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from curvlab.errors import DegenerateMetricError
from curvlab.linalg import (
    charpoly, invert, polynomial_roots, power_ranks, signature, spectral_profile,
)


class TestInvert:
    def test_matches_numpy(self, rng):
        a = rng.normal(size=(5, 5)) + 5 * np.eye(5)
        assert_allclose(invert(a) @ a, np.eye(5), atol=1e-13)

    def test_singular(self):
        with pytest.raises(DegenerateMetricError):
            invert(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_nearly_singular_within_tol(self):
        a = np.diag([1.0, 1e-14])
        with pytest.raises(DegenerateMetricError):
            invert(a)
        assert_allclose(invert(a, tol=1e-15), np.diag([1.0, 1e14]))

    def test_non_finite(self):
        with pytest.raises(DegenerateMetricError):
            invert(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_not_square(self):
        with pytest.raises(ValueError):
            invert(np.ones((2, 3)))


class TestSignature:
    @pytest.mark.parametrize("diag, expected", [
        ([1, 1, 1], (0, 3)),
        ([-1, 1, 1, 1], (1, 3)),
        ([-1, -1, 1, 1], (2, 2)),
        ([0, 1], (0, 1)),
    ])
    def test_diagonal(self, diag, expected):
        assert signature(np.diag(np.array(diag, dtype=float))) == expected

    def test_invariant_under_congruence(self, rng):
        g = np.diag([-1.0, -1.0, 1.0, 1.0])
        p = rng.normal(size=(4, 4)) + 3 * np.eye(4)
        assert signature(p.T @ g @ p) == (2, 2)


class TestCharpoly:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
    def test_matches_numpy_poly(self, n, seed):
        t = np.random.default_rng(seed).uniform(-1, 1, size=(n, n))
        assert_allclose(charpoly(t), np.poly(t), atol=1e-10)

    def test_companion_roots(self, rng):
        for n in (2, 4, 7):
            t = rng.normal(size=(n, n))
            roots = polynomial_roots(charpoly(t))
            expected = np.linalg.eigvals(t)
            assert_allclose(np.sort_complex(roots), np.sort_complex(expected), atol=1e-9)

    def test_roots_match_numpy(self):
        coeffs = np.array([1.0, -6.0, 11.0, -6.0])
        assert_allclose(np.sort(polynomial_roots(coeffs).real), np.sort(np.roots(coeffs).real), atol=1e-12)


class TestSpectralProfile:
    def test_repeated_real_eigenvalues(self):
        prof = spectral_profile(np.diag([1.0, 1.0, 3.0, 3.0]))
        assert [k for *_, k in prof.eigenvalues] == [2, 2]
        assert_allclose([re for re, *_ in prof.eigenvalues], [1.0, 3.0], rtol=1e-14)
        assert prof.ranks == (4, 4, 4, 4)
        assert not prof.is_nilpotent

    def test_conjugate_pair(self):
        s = 0.7
        rot = np.kron(np.eye(2), np.array([[0.0, -s], [s, 0.0]]))
        prof = spectral_profile(rot)
        assert len(prof.eigenvalues) == 2
        (re0, im0, k0), (re1, im1, k1) = prof.eigenvalues
        assert (k0, k1) == (2, 2)
        assert_allclose([re0, re1], [0.0, 0.0], atol=1e-9)
        assert_allclose([im0, im1], [-s, s], atol=1e-9)

    def test_jordan_block(self):
        t = np.diag(np.ones(3), k=1)
        prof = spectral_profile(t)
        assert prof.ranks == (3, 2, 1, 0)
        assert prof.nilpotency_index == 4
        assert prof.eigenvalues == ((0.0, 0.0, 4),)

    def test_zero_matrix(self):
        prof = spectral_profile(np.zeros((3, 3)))
        assert prof.ranks == (0, 0, 0)
        assert prof.nilpotency_index == 1

    def test_perturbed_multiple_root_is_clustered(self):
        t = 2.0 * np.eye(3) + np.diag(np.ones(2), k=1)
        prof = spectral_profile(t)
        assert len(prof.eigenvalues) == 1
        re, im, k = prof.eigenvalues[0]
        assert k == 3
        assert re == pytest.approx(2.0, abs=1e-9)

    def test_too_large(self):
        with pytest.raises(ValueError):
            spectral_profile(np.eye(17))

    def test_to_dict(self):
        d = spectral_profile(np.diag([1.0, 2.0])).to_dict()
        assert d["ranks"] == [2, 2]
        assert [e["multiplicity"] for e in d["eigenvalues"]] == [1, 1]


class TestPowerRanks:
    def test_rounding_noise_is_not_rank(self, rng):
        noise = 1e-17 * rng.normal(size=(4, 4))
        assert power_ranks(noise, ref_scale=1.0) == (0, 0, 0, 0)

    def test_rank_sequence_similarity_invariant(self, rng):
        n = np.diag(np.ones(2), k=1)
        t = np.zeros((4, 4))
        t[:3, :3] = n
        p = rng.normal(size=(4, 4)) + 3 * np.eye(4)
        conj = p @ t @ np.linalg.inv(p)
        assert power_ranks(conj) == power_ranks(t) == (2, 1, 0, 0)
