"""Covariance-function tests for the Markov / reciprocal / conditionally-Markov
hierarchy, valid for singular and nonsingular sequences alike.

Every check reduces to the same primitive: the cross-covariance between
times k and i must be reproduced by projecting through one or two
conditioning states, with inversion done by pseudoinverse so rank-deficient
blocks are handled uniformly.  A check passes when the worst Frobenius
defect is at most ``rel_tol * (1 + ||C||_F)``.

``cm_oracle`` is deliberately a different route to the same question: it
compares mean-square prediction errors of full-history versus two-state
predictors, so it can cross-validate the algebraic identities.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import BlockCovariance, Direction, as_direction
from .errors import ValidationError
from .linalg import mp_inverse

DEFAULT_REL_TOL = 1e-8

# Largest stacked dimension the brute-force oracle will accept.
ORACLE_MAX_DIM = 64


@dataclass(frozen=True)
class ClassificationReport:
    """Verdict of one covariance-level property check.

    ``passed`` holds iff ``worst_residual <= threshold`` with
    ``threshold = rel_tol * (1 + ||C||_F)``.  ``worst_indices`` names the
    time tuple achieving the worst residual (None when the index set is
    empty and the property holds vacuously).
    """

    name: str
    passed: bool
    worst_residual: float
    worst_indices: tuple | None
    rel_tol: float
    threshold: float

    def summary(self):
        verdict = "PASS" if self.passed else "FAIL"
        where = f" at {self.worst_indices}" if self.worst_indices is not None else ""
        return (f"{self.name}: {verdict} "
                f"(worst residual {self.worst_residual:.3e}{where}, "
                f"threshold {self.threshold:.3e})")


class _Projector:
    """Caches pseudoinverses of conditioning blocks for one covariance."""

    def __init__(self, cov):
        self.cov = cov
        self._single = {}
        self._pair = {}

    def single_defect(self, k, i, j):
        # defect of C_{k,i} = C_{k,j} C_j^+ C_{j,i}
        c = self.cov
        w = self._single.get(j)
        if w is None:
            w = mp_inverse(c.block(j, j))
            self._single[j] = w
        return c.block(k, i) - c.block(k, j) @ w @ c.block(j, i)

    def pair_defect(self, k, i, j, l):
        # defect of C_{k,i} = [C_{k,j} C_{k,l}] Cov([x_j;x_l])^+ [C_{j,i}; C_{l,i}]
        c = self.cov
        w = self._pair.get((j, l))
        if w is None:
            w = mp_inverse(c.gather([j, l], [j, l]))
            self._pair[(j, l)] = w
        lhs = c.gather([k], [j, l])
        rhs = c.gather([j, l], [i])
        return c.block(k, i) - lhs @ w @ rhs


def build_report(name, cov, rel_tol, worst, worst_idx):
    threshold = cov.threshold(rel_tol)
    return ClassificationReport(
        name=name,
        passed=bool(worst <= threshold),
        worst_residual=float(worst),
        worst_indices=worst_idx,
        rel_tol=float(rel_tol),
        threshold=float(threshold),
    )


def worst_pair_defect(cov, quads):
    """Largest Frobenius defect of the two-state projection identity over
    ``quads``, an iterable of (k, i, j, l) with (j, l) the conditioning pair.

    Shared by the reciprocal checks here and by the model-side reciprocity
    constraint, so both sides use identical arithmetic.
    """
    proj = _Projector(cov)
    worst, worst_idx = 0.0, None
    for k, i, j, l in quads:
        r = float(np.linalg.norm(proj.pair_defect(k, i, j, l)))
        if r > worst:
            worst, worst_idx = r, (i, j, k, l)
    return worst, worst_idx


def is_markov(cov: BlockCovariance, rel_tol=DEFAULT_REL_TOL):
    """Markov test: C_{k,i} = C_{k,j} C_j^+ C_{j,i} for all i < j < k."""
    proj = _Projector(cov)
    worst, worst_idx = 0.0, None
    for i, j, k in combinations(range(cov.n + 1), 3):
        r = float(np.linalg.norm(proj.single_defect(k, i, j)))
        if r > worst:
            worst, worst_idx = r, (i, j, k)
    return build_report("markov", cov, rel_tol, worst, worst_idx)


def is_interval_cm(cov: BlockCovariance, k1, k2, direction, rel_tol=DEFAULT_REL_TOL):
    """Conditionally-Markov test over the window [k1, k2].

    Conditioned on the state at the window's first (direction 'first') or
    last ('last') time, the rest of the window must be Markov.  Windows
    shorter than 3 interior-plus-anchor steps pass by definition.
    """
    direction = as_direction(direction)
    if not (0 <= k1 < k2 <= cov.n):
        raise ValidationError(f"invalid window [{k1}, {k2}] for horizon {cov.n}")
    c = k1 if direction is Direction.FIRST else k2
    name = f"cm_{direction.value}[{k1},{k2}]"
    times = [t for t in range(k1, k2 + 1) if t != c]
    quads = ((k, i, j, c) for i, j, k in combinations(times, 3))
    worst, worst_idx = worst_pair_defect(cov, quads)
    return build_report(name, cov, rel_tol, worst, worst_idx)


def is_cm(cov: BlockCovariance, direction, rel_tol=DEFAULT_REL_TOL):
    """Whole-interval conditionally-Markov test (window [0, n])."""
    direction = as_direction(direction)
    rep = is_interval_cm(cov, 0, cov.n, direction, rel_tol)
    return build_report(f"cm_{direction.value}", cov, rel_tol,
                   rep.worst_residual, rep.worst_indices)


def _reciprocal_quads(n):
    # (a) anchored below: l < i < j < k; (b) anchored at the last time:
    # i < j < k < l = n.  Together these characterize reciprocity.
    for a, b, c, dd in combinations(range(n + 1), 4):
        yield dd, b, c, a
    for i, j, k in combinations(range(n), 3):
        yield k, i, j, n


def is_reciprocal(cov: BlockCovariance, rel_tol=DEFAULT_REL_TOL):
    """Reciprocal test: two-state projection identities over both anchored
    index families (below-anchored quadruples plus last-time triples)."""
    worst, worst_idx = worst_pair_defect(cov, _reciprocal_quads(cov.n))
    return build_report("reciprocal", cov, rel_tol, worst, worst_idx)


def _augmented(cov, times, anchor):
    """Covariance of the stacked states y_t = [x_t; x_anchor] for t in times."""
    inter = []
    for t in times:
        inter.extend((t, anchor))
    return BlockCovariance(cov.gather(inter, inter), d=2 * cov.d, rel_tol=cov.rel_tol)


def is_cm_via_markov(cov: BlockCovariance, direction, rel_tol=DEFAULT_REL_TOL):
    """State-augmentation route to the conditionally-Markov test: the sequence
    of stacked states [x_k; x_anchor] (anchor excluded from the index range)
    must be Markov.  Verdicts agree with ``is_cm``; residual magnitudes may
    differ."""
    direction = as_direction(direction)
    anchor = direction.anchor(cov.n)
    times = [t for t in range(cov.n + 1) if t != anchor]
    rep = is_markov(_augmented(cov, times, anchor), rel_tol)
    worst_idx = None
    if rep.worst_indices is not None:
        worst_idx = tuple(times[p] for p in rep.worst_indices)
    return build_report(f"cm_{direction.value}_via_markov", cov, rel_tol,
                   rep.worst_residual, worst_idx)


def is_reciprocal_via_markov(cov: BlockCovariance, rel_tol=DEFAULT_REL_TOL):
    """State-augmentation route to the reciprocal test.

    For every anchor time a, the stacked sequence [x_k; x_a] over k > a must
    be Markov, and the last-time-anchored stacked sequence over k < n must
    be Markov.  Verdicts agree with ``is_reciprocal``.
    """
    n = cov.n
    worst, worst_idx = 0.0, None
    families = [(a, list(range(a + 1, n + 1))) for a in range(n + 1)]
    families.append((n, list(range(n))))
    for anchor, times in families:
        if len(times) < 3:
            continue
        rep = is_markov(_augmented(cov, times, anchor), rel_tol)
        if rep.worst_residual > worst:
            worst = rep.worst_residual
            mapped = tuple(times[p] for p in rep.worst_indices)
            worst_idx = (anchor,) + mapped
    return build_report("reciprocal_via_markov", cov, rel_tol, worst, worst_idx)


def cm_oracle(cov: BlockCovariance, direction, rel_tol=DEFAULT_REL_TOL):
    """Brute-force conditionally-Markov oracle via prediction errors.

    For every pair j < k, predicts x_k once from the whole history up to j
    plus the anchor state, and once from (x_j, x_anchor) alone, both by
    pseudoinverse projection on the joint covariance.  The sequence is
    conditionally Markov iff the two mean-square errors coincide for every
    pair, so the worst trace gap is the residual.  Independent of the
    projection-identity route; intended as its cross-check at small scale.
    """
    direction = as_direction(direction)
    if cov.matrix.shape[0] > ORACLE_MAX_DIM:
        raise ValidationError(
            f"oracle scale guard exceeded: dimension {cov.matrix.shape[0]} > {ORACLE_MAX_DIM}"
        )
    anchor = direction.anchor(cov.n)
    times = [t for t in range(cov.n + 1) if t != anchor]

    def mse(k, cond):
        czz = cov.gather(cond, cond)
        cxz = cov.gather([k], cond)
        err = cov.block(k, k) - cxz @ mp_inverse(czz) @ cxz.T
        return float(np.trace(err))

    worst, worst_idx = 0.0, None
    for j, k in combinations(times, 2):
        full = sorted(set(range(j + 1)) | {anchor})
        gap = mse(k, [j, anchor]) - mse(k, full)
        if gap > worst:
            worst, worst_idx = gap, (j, k)
    return build_report(f"cm_{direction.value}_oracle", cov, rel_tol, worst, worst_idx)
