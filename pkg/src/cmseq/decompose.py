"""Markov-plus-independent-vector structure of endpoint-conditioned sequences.

An endpoint-conditioned sequence can always be written as x_k = y_k + G_k x_c
with [y_k] a Markov sequence uncorrelated with the endpoint state x_c.  At
the covariance level this reads C = B + Gamma D Gamma' with B a Markov
covariance embedded away from the anchor block, D the anchor covariance and
Gamma the stacked per-time gains (identity at the anchor).  This module
builds covariances from that recipe and verifies candidate decompositions.
"""

import numpy as np

from .characterize import DEFAULT_REL_TOL, is_markov
from .core import BlockCovariance, Direction, as_direction
from .errors import PreconditionError, ValidationError
from .linalg import as_matrix, mp_inverse, psd_project_check

__all__ = ["build_cm_covariance", "canonical_gamma", "markov_part_check"]


def build_cm_covariance(markov_cov: BlockCovariance, s, dmat, direction,
                        rel_tol=DEFAULT_REL_TOL):
    """Assemble an endpoint-conditioned covariance as B + Gamma D Gamma'.

    Parameters
    ----------
    markov_cov : BlockCovariance
        Covariance of the Markov part over the non-anchor times (N blocks
        for a built sequence over times 0..N).  Must pass ``is_markov``.
    s : array_like, shape (N*d, d)
        Stacked per-time gains applied to the anchor state.
    dmat : array_like, shape (d, d)
        PSD covariance of the anchor state.
    direction : Direction or str
        Where the anchor sits: 'last' puts it at the final time, 'first' at
        time 0.

    Returns
    -------
    BlockCovariance
        Covariance over N+1 times; conditionally Markov in the requested
        direction by construction.
    """
    direction = as_direction(direction)
    report = is_markov(markov_cov, rel_tol)
    if not report.passed:
        raise PreconditionError(
            f"Markov part is not Markov ({report.summary()})", report=report)
    d = markov_cov.d
    nd = markov_cov.matrix.shape[0]
    s = as_matrix(s, "gain stack")
    if s.shape != (nd, d):
        raise ValidationError(f"gain stack must be {(nd, d)}, got {s.shape}")
    ok, dsym = psd_project_check(as_matrix(dmat, "anchor covariance"))
    if dsym.shape != (d, d):
        raise ValidationError(f"anchor covariance must be {(d, d)}, got {dsym.shape}")
    if not ok:
        raise ValidationError("anchor covariance is not positive semidefinite")

    side = nd + d
    b = np.zeros((side, side))
    if direction is Direction.LAST:
        b[:nd, :nd] = markov_cov.matrix
        gamma = np.vstack([s, np.eye(d)])
    else:
        b[d:, d:] = markov_cov.matrix
        gamma = np.vstack([np.eye(d), s])
    return BlockCovariance(b + gamma @ dsym @ gamma.T, d=d)


def canonical_gamma(cov: BlockCovariance, direction):
    """Minimum-norm decoupling gains: Gamma_k = C_{k,c} C_c^+ for k != c.

    This is the conditional-expectation coefficient of x_k on the anchor
    state, and it is the choice under which the remainder x_k - Gamma_k x_c
    is uncorrelated with x_c for any valid covariance.
    """
    direction = as_direction(direction)
    c = direction.anchor(cov.n)
    w = mp_inverse(cov.block(c, c))
    return [cov.block(k, c) @ w for k in range(cov.n + 1) if k != c]


def markov_part_check(cov: BlockCovariance, gamma, direction,
                      rel_tol=DEFAULT_REL_TOL):
    """Verify a candidate decomposition of ``cov``.

    ``gamma`` lists the per-time gains for the non-anchor times in
    increasing time order.  Returns True iff the remainder sequence
    y_k = x_k - gamma_k x_c is uncorrelated with the anchor state and its
    covariance is Markov, both within the scale-aware tolerance.
    """
    direction = as_direction(direction)
    n, d = cov.n, cov.d
    c = direction.anchor(n)
    times = [t for t in range(n + 1) if t != c]
    if len(gamma) != len(times):
        raise ValidationError(
            f"expected {len(times)} gain blocks, got {len(gamma)}")
    gamma = [as_matrix(g, f"gamma[{t}]") for g, t in zip(gamma, times)]
    for g, t in zip(gamma, times):
        if g.shape != (d, d):
            raise ValidationError(f"gamma[{t}] must be {(d, d)}, got {g.shape}")

    c_cc = cov.block(c, c)
    threshold = cov.threshold(rel_tol)
    for g, t in zip(gamma, times):
        cross = cov.block(t, c) - g @ c_cc
        if np.linalg.norm(cross) > threshold:
            return False

    y = np.empty((len(times) * d, len(times) * d))
    for a, (ga, ta) in enumerate(zip(gamma, times)):
        for b, (gb, tb) in enumerate(zip(gamma, times)):
            blk = (cov.block(ta, tb) - ga @ cov.block(c, tb)
                   - cov.block(ta, c) @ gb.T + ga @ c_cc @ gb.T)
            y[a * d:(a + 1) * d, b * d:(b + 1) * d] = blk
    return is_markov(BlockCovariance(y, d=d, rel_tol=cov.rel_tol), rel_tol).passed
