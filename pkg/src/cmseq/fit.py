"""Recover dynamic-model parameters from a sequence covariance.

The construction is the conditional-expectation one: each interior state is
regressed on its predecessor and the conditioning endpoint through the
pseudoinverse of their joint covariance, and the noise covariance is the
resulting Schur-complement residual.  Because the regression uses the
minimum-norm (pseudoinverse) solution, the recovered parameters are one
representative of a family whenever blocks are singular; the contract is
that the fitted model reproduces the input covariance, not that parameters
are unique.
"""

import numpy as np

from .characterize import DEFAULT_REL_TOL, is_cm, is_reciprocal
from .core import BlockCovariance, Direction, as_direction
from .errors import PreconditionError, ValidationError
from .linalg import mp_inverse
from .model import CmModel

__all__ = ["fit_cm", "fit_reciprocal"]


def _clip_residual_psd(a, floor):
    # Residual noise covariances are Schur complements; clip rounding-level
    # negatives to zero, reject anything below -floor.
    sym = 0.5 * (a + a.T)
    eigs, vecs = np.linalg.eigh(sym)
    if eigs.size and eigs.min() < -floor:
        raise ValidationError(
            f"residual noise covariance is indefinite (min eigenvalue {eigs.min():.6e}, "
            f"floor {-floor:.6e})"
        )
    return (vecs * np.clip(eigs, 0.0, None)) @ vecs.T


def fit_cm(cov: BlockCovariance, direction, enforce=True, rel_tol=DEFAULT_REL_TOL):
    """Fit an endpoint-conditioned model whose covariance reproduces ``cov``.

    Parameters
    ----------
    cov : BlockCovariance
        Sequence covariance to fit.  Must satisfy the conditionally-Markov
        property in the requested direction for the reproduction guarantee
        to hold.
    direction : Direction or str
        Conditioning endpoint of the fitted model.
    enforce : bool
        When true (default), run ``is_cm`` first and raise
        ``PreconditionError`` (carrying the failing report) if it fails.
        When false, fit anyway; only pairwise/boundary marginals are then
        guaranteed to match.
    rel_tol : float
        Tolerance for the precondition check and for clipping
        rounding-level negative eigenvalues of the residual noise blocks.

    Returns
    -------
    CmModel
    """
    direction = as_direction(direction)
    if enforce:
        report = is_cm(cov, direction, rel_tol)
        if not report.passed:
            raise PreconditionError(
                f"covariance is not conditionally Markov ({report.summary()})",
                report=report,
            )

    n, d = cov.n, cov.d
    floor = cov.threshold(rel_tol)
    transition, coupling, noise = {}, {}, {}

    if direction is Direction.LAST:
        noise[n] = cov.block(n, n).copy()
        w = mp_inverse(cov.block(n, n))
        coupling[0] = cov.block(0, n) @ w
        noise[0] = _clip_residual_psd(
            cov.block(0, 0) - coupling[0] @ cov.block(n, 0), floor)
        for k in range(1, n):
            cxy = cov.gather([k], [k - 1, n])
            gain = cxy @ mp_inverse(cov.gather([k - 1, n], [k - 1, n]))
            transition[k] = gain[:, :d]
            coupling[k] = gain[:, d:]
            noise[k] = _clip_residual_psd(cov.block(k, k) - gain @ cxy.T, floor)
    else:
        noise[0] = cov.block(0, 0).copy()
        transition[1] = cov.block(1, 0) @ mp_inverse(cov.block(0, 0))
        noise[1] = _clip_residual_psd(
            cov.block(1, 1) - transition[1] @ cov.block(0, 1), floor)
        for k in range(2, n + 1):
            cxy = cov.gather([k], [k - 1, 0])
            gain = cxy @ mp_inverse(cov.gather([k - 1, 0], [k - 1, 0]))
            transition[k] = gain[:, :d]
            coupling[k] = gain[:, d:]
            noise[k] = _clip_residual_psd(cov.block(k, k) - gain @ cxy.T, floor)

    return CmModel(n=n, d=d, direction=direction,
                   transition=transition, coupling=coupling, noise_cov=noise)


def fit_reciprocal(cov: BlockCovariance, rel_tol=DEFAULT_REL_TOL):
    """Fit a last-conditioned model to a reciprocal covariance.

    Requires ``is_reciprocal`` to pass; the returned model then satisfies
    the model-side reciprocity constraint by construction (its covariance
    is the input covariance).
    """
    report = is_reciprocal(cov, rel_tol)
    if not report.passed:
        raise PreconditionError(
            f"covariance is not reciprocal ({report.summary()})",
            report=report,
        )
    return fit_cm(cov, Direction.LAST, enforce=False, rel_tol=rel_tol)
