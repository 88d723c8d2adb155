import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmseq import IndefiniteMatrixError, ValidationError, mp_inverse, psd_factor, psd_project_check


def penrose_defects(a, pinv):
    """Max-norm defects of the four Penrose conditions."""
    return (
        np.abs(a @ pinv @ a - a).max(),
        np.abs(pinv @ a @ pinv - pinv).max(),
        np.abs((a @ pinv).T - a @ pinv).max(),
        np.abs((pinv @ a).T - pinv @ a).max(),
    )


class TestMpInverse:
    def test_identity(self):
        np.testing.assert_allclose(mp_inverse(np.eye(2)), np.eye(2), atol=1e-14)

    def test_zero_maps_to_zero(self):
        np.testing.assert_array_equal(mp_inverse(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_singular_diagonal(self):
        np.testing.assert_allclose(mp_inverse(np.diag([2.0, 0.0])),
                                   np.diag([0.5, 0.0]), atol=1e-14)

    def test_rank_one_ones(self):
        # ones(2,2) has pseudoinverse 0.25*ones(2,2); verified here against
        # the four Penrose conditions rather than asserted blindly.
        a = np.ones((2, 2))
        pinv = mp_inverse(a)
        np.testing.assert_allclose(pinv, 0.25 * np.ones((2, 2)), atol=1e-14)
        assert max(penrose_defects(a, pinv)) < 1e-12

    def test_rectangular(self):
        a = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        assert mp_inverse(a).shape == (3, 2)
        assert max(penrose_defects(a, mp_inverse(a))) < 1e-9

    def test_rejects_nonfinite(self):
        with pytest.raises(ValidationError):
            mp_inverse(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_rejects_bad_tol(self):
        with pytest.raises(ValidationError):
            mp_inverse(np.eye(2), rel_tol=0.0)

    @settings(deadline=None, max_examples=60)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 6), m=st.integers(1, 6))
    def test_penrose_conditions_random(self, seed, n, m):
        a = np.random.default_rng(seed).normal(size=(n, m))
        pinv = mp_inverse(a)
        sigma_max = np.linalg.norm(a, 2)
        assert max(penrose_defects(a, pinv)) <= 1e-9 * (1.0 + sigma_max)

    @settings(deadline=None, max_examples=60)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 6), m=st.integers(1, 6))
    def test_involution(self, seed, n, m):
        a = np.random.default_rng(seed).normal(size=(n, m))
        back = mp_inverse(mp_inverse(a))
        assert np.abs(back - a).max() <= 1e-9 * (1.0 + np.linalg.norm(a, 2))


class TestPsdProjectCheck:
    def test_identity(self):
        ok, sym = psd_project_check(np.eye(3))
        assert ok
        np.testing.assert_array_equal(sym, np.eye(3))

    def test_boundary_psd(self):
        ok, sym = psd_project_check(np.diag([1.0, 0.0]))
        assert ok
        np.testing.assert_array_equal(sym, np.diag([1.0, 0.0]))

    def test_indefinite(self):
        ok, sym = psd_project_check(np.diag([1.0, -1.0]))
        assert not ok
        np.testing.assert_array_equal(sym, np.diag([1.0, -1.0]))

    def test_symmetrizes(self):
        _, sym = psd_project_check(np.array([[1.0, 2.0], [0.0, 1.0]]))
        np.testing.assert_allclose(sym, np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValidationError):
            psd_project_check(np.zeros((2, 3)))


class TestPsdFactor:
    def test_identity(self):
        f = psd_factor(np.eye(2))
        assert f.rank == 2
        np.testing.assert_allclose(f.reconstruct(), np.eye(2), atol=1e-12)

    def test_zero_has_no_columns(self):
        f = psd_factor(np.zeros((2, 2)))
        assert f.base.shape == (2, 0)
        np.testing.assert_array_equal(f.reconstruct(), np.zeros((2, 2)))

    def test_reconstructs(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        f = psd_factor(a)
        np.testing.assert_allclose(f.reconstruct(), a, atol=1e-12)

    def test_rank_deficient(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        f = psd_factor(a)
        assert f.rank == 1
        np.testing.assert_allclose(f.reconstruct(), a, atol=1e-12)

    def test_indefinite_reports_eigenvalue(self):
        with pytest.raises(IndefiniteMatrixError) as exc:
            psd_factor(np.diag([1.0, -0.5]))
        assert exc.value.min_eigenvalue == pytest.approx(-0.5)

    @settings(deadline=None, max_examples=60)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 6), m=st.integers(0, 6))
    def test_gram_reconstruction(self, seed, n, m):
        b = np.random.default_rng(seed).normal(size=(n, m))
        gram = b @ b.T
        f = psd_factor(gram)
        sigma_max = np.linalg.norm(gram, 2)
        assert np.abs(f.reconstruct() - gram).max() <= 1e-9 * (1.0 + sigma_max)
        assert f.rank == np.linalg.matrix_rank(gram)
