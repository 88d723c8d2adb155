"""Endpoint-conditioned linear-Gaussian dynamic models.

A model evolves a zero-mean Gaussian sequence x_0..x_n of d-vectors by

    x_k = transition[k] x_{k-1} + coupling[k] x_c + e_k

for interior times k, where c is the conditioning endpoint (time 0 or n)
and [e_k] is independent zero-mean Gaussian noise with covariance
noise_cov[k].  For last-time conditioning the boundary is seeded at the
destination: x_n = e_n, then x_0 = coupling[0] x_n + e_0.  For first-time
conditioning: x_0 = e_0.

Noise covariances may be rank-deficient or exactly zero; that is the whole
point.  A zero noise_cov[n] with last-time conditioning pins the sequence
to a fixed destination, and zero interior noise makes steps deterministic.
Every parameter choice yields a well-defined covariance, assembled here by
forward block substitution (never dense inversion).
"""

import hashlib
from dataclasses import dataclass, field
from itertools import combinations
from types import MappingProxyType

import numpy as np

from . import characterize
from .core import BlockCovariance, Direction, as_direction
from .errors import ValidationError
from .linalg import as_matrix, mp_inverse, psd_factor, psd_project_check

__all__ = [
    "BlockCovariance",
    "CmModel",
    "Direction",
    "SingularityReport",
    "TrajectoryEnsemble",
    "assemble_g",
    "boundary_nonsingular",
    "covariance_of",
    "interior_times",
    "is_reciprocal_model",
    "noise_to_state",
    "sample",
    "singularity_report",
]


def _frozen_block(value, d, name):
    m = as_matrix(value, name)
    if m.shape != (d, d):
        raise ValidationError(f"{name} must be {d}x{d}, got {m.shape}")
    m = m.copy()
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class CmModel:
    """Parameters of an endpoint-conditioned dynamic model.

    Parameters
    ----------
    n : int
        Horizon; the sequence runs over times 0..n, n >= 1.
    d : int
        State dimension.
    direction : Direction or str
        Conditioning endpoint: 'first' (time 0) or 'last' (time n).
    transition : mapping {k: (d, d) array}
        Step gains for interior times k (1..n-1 for 'last', 1..n for
        'first').  Missing keys default to zero blocks.
    coupling : mapping {k: (d, d) array}
        Endpoint gains for the same interior times, plus k=0 for 'last'
        (the boundary gain from the destination back to the origin).
        Missing keys default to zero blocks.
    noise_cov : mapping {k: (d, d) PSD array}
        Noise covariances for every time 0..n; may be singular or zero.
        Missing keys default to zero blocks.
    """

    n: int
    d: int
    direction: Direction
    transition: dict = field(default_factory=dict)
    coupling: dict = field(default_factory=dict)
    noise_cov: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("horizon n must be >= 1")
        if self.d < 1:
            raise ValidationError("state dimension d must be >= 1")
        direction = as_direction(self.direction)
        object.__setattr__(self, "direction", direction)

        interior = interior_times(self.n, direction)
        coupled = interior if direction is Direction.FIRST else [0, *interior]
        d = self.d

        def normalize(given, keys, label, psd=False):
            given = dict(given)
            extra = set(given) - set(keys)
            if extra:
                raise ValidationError(f"unexpected {label} time indices {sorted(extra)}")
            out = {}
            for k in keys:
                block = given.get(k)
                block = np.zeros((d, d)) if block is None else block
                block = _frozen_block(block, d, f"{label}[{k}]")
                if psd:
                    ok, sym = psd_project_check(block)
                    if not ok:
                        raise ValidationError(f"{label}[{k}] is not positive semidefinite")
                    sym.setflags(write=False)
                    block = sym
                out[k] = block
            return MappingProxyType(out)

        object.__setattr__(self, "transition", normalize(self.transition, interior, "transition"))
        object.__setattr__(self, "coupling", normalize(self.coupling, coupled, "coupling"))
        object.__setattr__(self, "noise_cov",
                           normalize(self.noise_cov, range(self.n + 1), "noise_cov", psd=True))

    @property
    def anchor(self):
        """Time index of the conditioning endpoint."""
        return self.direction.anchor(self.n)

    @classmethod
    def from_origin_boundary(cls, n, d, transition, coupling, noise_cov, origin_gain):
        """Build a last-conditioned model from the origin-seeded boundary form.

        In this form the boundary law is x_0 = e_0, x_n = origin_gain x_0 + e_n
        (with noise_cov[0] and noise_cov[n] the covariances of e_0 and e_n).
        The two forms describe the same joint endpoint law; this converts to
        the canonical destination-seeded parameterization.
        """
        gain = as_matrix(origin_gain, "origin_gain")
        q0 = psd_project_check(as_matrix(noise_cov[0], "noise_cov[0]"))[1]
        qn = psd_project_check(as_matrix(noise_cov[n], "noise_cov[n]"))[1]
        c_n = gain @ q0 @ gain.T + qn
        c_0n = q0 @ gain.T
        w = mp_inverse(c_n)
        boundary_gain = c_0n @ w
        e0_cov = q0 - c_0n @ w @ c_0n.T
        noise = dict(noise_cov)
        noise[0] = _clip_tiny_negatives(e0_cov)
        noise[n] = c_n
        coupling = dict(coupling)
        coupling[0] = boundary_gain
        return cls(n=n, d=d, direction=Direction.LAST,
                   transition=transition, coupling=coupling, noise_cov=noise)

    def hash_hex(self):
        """Stable hash of the parameters; stamped on sampled ensembles."""
        h = hashlib.sha256()
        h.update(f"{self.n}:{self.d}:{self.direction.value}".encode())
        for label, blocks in (("t", self.transition), ("c", self.coupling),
                              ("g", self.noise_cov)):
            for k in sorted(blocks):
                h.update(f"{label}{k}".encode())
                h.update(np.ascontiguousarray(blocks[k]).tobytes())
        return h.hexdigest()[:16]


def interior_times(n, direction):
    """Times driven by the recursion: 1..n excluding the conditioning endpoint."""
    direction = as_direction(direction)
    return [k for k in range(1, n + 1) if k != direction.anchor(n)]


def _clip_tiny_negatives(sym, rel_floor=1e-10):
    # Schur-complement residuals pick up rounding; zero out eigenvalues in
    # [-rel_floor * scale, 0) and reject anything genuinely negative.
    eigs, vecs = np.linalg.eigh(sym)
    floor = -rel_floor * max(abs(eigs).max() if eigs.size else 0.0, 1.0)
    if eigs.min() < floor:
        raise ValidationError(
            f"matrix is not positive semidefinite (min eigenvalue {eigs.min():.6e})"
        )
    return (vecs * np.clip(eigs, 0.0, None)) @ vecs.T


def _block(idx, d):
    return slice(idx * d, (idx + 1) * d)


def assemble_g(model: CmModel):
    """Dense whitening map: the block matrix G with G x = e for the stacked
    sequence x and stacked noise e.

    Unit diagonal blocks, negated transitions on the subdiagonal, negated
    couplings in the anchor column (entries add where the two coincide, which
    happens at k=1 under first-time conditioning).  Always invertible.
    """
    n, d = model.n, model.d
    m = (n + 1) * d
    g = np.zeros((m, m))
    for k in range(n + 1):
        g[_block(k, d), _block(k, d)] = np.eye(d)
    c = model.anchor
    for k in interior_times(n, model.direction):
        g[_block(k, d), _block(k - 1, d)] -= model.transition[k]
        g[_block(k, d), _block(c, d)] -= model.coupling[k]
    if model.direction is Direction.LAST:
        g[_block(0, d), _block(n, d)] -= model.coupling[0]
    return g


def noise_to_state(model: CmModel):
    """Inverse of the whitening map, built by forward block substitution in
    the propagation order (anchor state first).  Row block k gives the
    linear influence of each noise term on x_k."""
    n, d = model.n, model.d
    m = (n + 1) * d
    t = np.zeros((m, m))
    eye = np.eye(d)
    if model.direction is Direction.LAST:
        t[_block(n, d), _block(n, d)] = eye
        t[_block(0, d), :] = model.coupling[0] @ t[_block(n, d), :]
        t[_block(0, d), _block(0, d)] += eye
        for k in range(1, n):
            t[_block(k, d), :] = (model.transition[k] @ t[_block(k - 1, d), :]
                                  + model.coupling[k] @ t[_block(n, d), :])
            t[_block(k, d), _block(k, d)] += eye
    else:
        t[_block(0, d), _block(0, d)] = eye
        for k in range(1, n + 1):
            t[_block(k, d), :] = (model.transition[k] @ t[_block(k - 1, d), :]
                                  + model.coupling[k] @ t[_block(0, d), :])
            t[_block(k, d), _block(k, d)] += eye
    return t


def covariance_of(model: CmModel):
    """Covariance of the whole sequence implied by the model.

    Computed as W W' with W the noise-to-state map times a rank-revealing
    square root of the block-diagonal noise covariance, so the result is
    symmetric PSD by construction for every parameter value.
    """
    n, d = model.n, model.d
    t = noise_to_state(model)
    bases = [psd_factor(model.noise_cov[k]).base for k in range(n + 1)]
    total = sum(b.shape[1] for b in bases)
    w = np.zeros(((n + 1) * d, total))
    col = 0
    for k, base in enumerate(bases):
        r = base.shape[1]
        if r:
            w[:, col:col + r] = t[:, _block(k, d)] @ base
        col += r
    return BlockCovariance(w @ w.T, d=d)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Sampled paths plus the metadata needed to reproduce them.

    ``paths`` has shape (count, n+1, d).  ``model_hash`` is
    ``CmModel.hash_hex()`` of the generating model.
    """

    paths: np.ndarray
    seed: int
    model_hash: str

    @property
    def count(self):
        return self.paths.shape[0]

    @property
    def n(self):
        return self.paths.shape[1] - 1

    @property
    def d(self):
        return self.paths.shape[2]

    def empirical_covariance(self):
        """Second-moment estimate of the sequence covariance (known zero mean)."""
        x = self.paths.reshape(self.count, -1)
        return BlockCovariance(x.T @ x / self.count, d=self.d)


def sample(model: CmModel, count, seed=0):
    """Draw ``count`` independent paths from the model.

    Deterministic given ``seed``: identical calls produce bit-identical
    ensembles.  Singular noise is sampled through its rank-revealing factor,
    so zero-noise steps are exactly deterministic (a zero destination noise
    yields x_n = 0 in every path, exactly).
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    n, d = model.n, model.d
    rng = np.random.default_rng(seed)
    bases = {k: psd_factor(model.noise_cov[k]).base for k in range(n + 1)}

    def draw(k):
        base = bases[k]
        return rng.standard_normal((count, base.shape[1])) @ base.T

    x = np.zeros((count, n + 1, d))
    if model.direction is Direction.LAST:
        x[:, n] = draw(n)
        x[:, 0] = x[:, n] @ model.coupling[0].T + draw(0)
        for k in range(1, n):
            x[:, k] = (x[:, k - 1] @ model.transition[k].T
                       + x[:, n] @ model.coupling[k].T + draw(k))
    else:
        x[:, 0] = draw(0)
        for k in range(1, n + 1):
            x[:, k] = (x[:, k - 1] @ model.transition[k].T
                       + x[:, 0] @ model.coupling[k].T + draw(k))
    x.setflags(write=False)
    return TrajectoryEnsemble(paths=x, seed=int(seed), model_hash=model.hash_hex())


@dataclass(frozen=True)
class SingularityReport:
    """Per-time degeneracy flags for a last-conditioned model.

    ``noise_degenerate[k]`` — the step noise at k is (numerically) zero, so
    x_k is almost surely a linear function of (x_{k-1}, x_n).
    ``state_as_zero[k]`` — additionally the projection coefficient term has
    zero covariance, so x_k itself is almost surely zero.  The second flag
    implies the first by construction.
    ``rank_noise[k]`` — numerical rank of noise_cov[k].
    """

    times: tuple
    noise_degenerate: dict
    state_as_zero: dict
    rank_noise: dict


def singularity_report(model: CmModel, rel_tol=1e-9):
    """Locate almost-sure degeneracies of a last-conditioned model.

    For each interior time, flags whether the step noise vanishes and
    whether the state is almost surely zero (noise vanishes and the
    conditional-mean coefficient term has zero covariance, evaluated on the
    assembled sequence covariance).
    """
    if as_direction(model.direction) is not Direction.LAST:
        raise ValidationError("singularity_report requires last-time conditioning")
    n = model.n
    cov = covariance_of(model)
    noise_scale = 1.0 + max(float(np.linalg.norm(model.noise_cov[k]))
                            for k in range(n + 1))
    times = tuple(range(1, n))
    degenerate, as_zero, ranks = {}, {}, {}
    for k in times:
        g_k = model.noise_cov[k]
        ranks[k] = psd_factor(g_k).rank
        degenerate[k] = bool(np.linalg.norm(g_k) <= rel_tol * noise_scale)
        cxy = cov.gather([k], [k - 1, n])
        w = mp_inverse(cov.gather([k - 1, n], [k - 1, n]))
        coeff_cov = cxy @ w @ cxy.T
        as_zero[k] = bool(degenerate[k]
                          and np.linalg.norm(coeff_cov) <= cov.threshold(rel_tol))
    return SingularityReport(times=times, noise_degenerate=degenerate,
                             state_as_zero=as_zero, rank_noise=ranks)


def boundary_nonsingular(model: CmModel, rel_tol=1e-12):
    """Joint nonsingularity of (x_k, x_n) for each k in 0..n-2.

    True when the stacked 2d-by-2d covariance block has smallest eigenvalue
    above ``rel_tol`` times its largest.  A zero destination covariance
    forces every flag false.
    """
    if as_direction(model.direction) is not Direction.LAST:
        raise ValidationError("boundary_nonsingular requires last-time conditioning")
    cov = covariance_of(model)
    n = model.n
    flags = []
    for k in range(n - 1):
        eigs = np.linalg.eigvalsh(cov.gather([k, n], [k, n]))
        lam_max = float(eigs.max())
        flags.append(bool(lam_max > 0 and eigs.min() > rel_tol * lam_max))
    return flags


def is_reciprocal_model(model: CmModel, rel_tol=1e-8):
    """Check whether the model's implied covariance satisfies the extra
    two-point projection constraint that upgrades an endpoint-conditioned
    model to a reciprocal one.

    For last-time conditioning the constraint runs over quadruples
    l < i < j < k (the below-anchored family); for first-time conditioning
    over i < j < k < l.  The families the model already guarantees by being
    endpoint-conditioned are not re-checked.
    """
    cov = covariance_of(model)
    n = cov.n
    if model.direction is Direction.LAST:
        quads = ((dd, b, c, a) for a, b, c, dd in combinations(range(n + 1), 4))
    else:
        quads = ((c, a, b, dd) for a, b, c, dd in combinations(range(n + 1), 4))
    worst, worst_idx = characterize.worst_pair_defect(cov, quads)
    return characterize.build_report("reciprocal_model", cov, rel_tol, worst, worst_idx)
