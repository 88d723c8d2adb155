import numpy as np
import pytest

from cmseq import (BlockCovariance, PreconditionError, ValidationError,
                   build_cm_covariance, canonical_gamma, covariance_of, fit_cm,
                   is_cm, markov_part_check)
from gen import ar1_cov, rnd_model, rnd_psd


class TestBuildCmCovariance:
    def test_identity_parts_give_identity(self):
        b1 = BlockCovariance(np.eye(4), d=1)
        cov = build_cm_covariance(b1, np.zeros((4, 1)), np.eye(1), "last")
        np.testing.assert_allclose(cov.matrix, np.eye(5), atol=1e-14)
        assert is_cm(cov, "last").passed

    def test_zero_gains_make_anchor_independent(self):
        b1 = ar1_cov(3, a=0.5)
        dmat = np.array([[2.0]])
        cov = build_cm_covariance(b1, np.zeros((4, 1)), dmat, "last")
        np.testing.assert_allclose(cov.block(4, 4), dmat)
        for k in range(4):
            np.testing.assert_array_equal(cov.block(k, 4), np.zeros((1, 1)))
        assert is_cm(cov, "last").passed

    def test_first_anchored_layout(self):
        b1 = ar1_cov(3, a=0.5)
        cov = build_cm_covariance(b1, np.zeros((4, 1)), np.eye(1), "first")
        np.testing.assert_allclose(cov.block(0, 0), np.eye(1))
        np.testing.assert_allclose(cov.matrix[1:, 1:], b1.matrix, atol=1e-14)
        assert is_cm(cov, "first").passed

    @pytest.mark.parametrize("direction", ["first", "last"])
    def test_random_builds_are_cm(self, direction):
        rng = np.random.default_rng(50)
        for _ in range(10):
            n, d = int(rng.integers(2, 7)), int(rng.integers(1, 3))
            b1 = ar1_cov(n - 1, a=float(rng.uniform(0.2, 0.9)), d=d,
                         base=rnd_psd(rng, d))
            s = rng.normal(size=(n * d, d))
            dmat = rnd_psd(rng, d, rank=int(rng.integers(0, d + 1)))
            cov = build_cm_covariance(b1, s, dmat, direction)
            assert is_cm(cov, direction, rel_tol=1e-9).passed

    def test_rejects_non_markov_part(self):
        bad = BlockCovariance(np.array([[1.0, 0.0, 0.9],
                                        [0.0, 1.0, 0.0],
                                        [0.9, 0.0, 1.0]]), d=1)
        with pytest.raises(PreconditionError):
            build_cm_covariance(bad, np.zeros((3, 1)), np.eye(1), "last")

    def test_rejects_shape_mismatch(self):
        b1 = ar1_cov(3, a=0.5)
        with pytest.raises(ValidationError):
            build_cm_covariance(b1, np.zeros((3, 1)), np.eye(1), "last")
        with pytest.raises(ValidationError):
            build_cm_covariance(b1, np.zeros((4, 1)), np.eye(2), "last")
        with pytest.raises(ValidationError):
            build_cm_covariance(b1, np.zeros((4, 1)), [[-1.0]], "last")


class TestMarkovPartCheck:
    def test_canonical_gains_pass_on_cm_covariance(self):
        rng = np.random.default_rng(51)
        m = rnd_model(rng, n=5, d=2, direction="last")
        cov = covariance_of(m)
        gamma = canonical_gamma(cov, "last")
        assert markov_part_check(cov, gamma, "last")

    def test_zero_gains_pass_on_block_diagonal(self):
        b1 = ar1_cov(3, a=0.5)
        cov = build_cm_covariance(b1, np.zeros((4, 1)), np.eye(1), "last")
        assert markov_part_check(cov, [np.zeros((1, 1))] * 4, "last")

    def test_zero_gains_fail_when_anchor_is_coupled(self):
        rng = np.random.default_rng(52)
        m = rnd_model(rng, n=4, d=1, direction="last", noise="nonsingular")
        cov = covariance_of(m)
        assert np.abs(cov.block(1, 4)).max() > 1e-3
        assert not markov_part_check(cov, [np.zeros((1, 1))] * 4, "last")

    def test_rejects_wrong_gain_count(self):
        cov = ar1_cov(4, a=0.5)
        with pytest.raises(ValidationError):
            markov_part_check(cov, [np.zeros((1, 1))] * 3, "last")

    @pytest.mark.parametrize("direction", ["first", "last"])
    def test_canonical_gains_pass_for_every_cm_instance(self, direction):
        rng = np.random.default_rng(53)
        for _ in range(10):
            m = rnd_model(rng, n=int(rng.integers(2, 6)), d=int(rng.integers(1, 3)),
                          direction=direction)
            cov = covariance_of(m)
            assert markov_part_check(cov, canonical_gamma(cov, direction), direction)


class TestBuildFitRoundTrip:
    def test_build_then_fit_reproduces(self):
        rng = np.random.default_rng(54)
        for _ in range(5):
            n, d = 5, 2
            b1 = ar1_cov(n - 1, a=0.6, d=d, base=rnd_psd(rng, d))
            s = rng.normal(size=(n * d, d))
            dmat = rnd_psd(rng, d)
            cov = build_cm_covariance(b1, s, dmat, "last")
            refit = covariance_of(fit_cm(cov, "last"))
            assert (np.linalg.norm(refit.matrix - cov.matrix)
                    / np.linalg.norm(cov.matrix)) <= 1e-8
