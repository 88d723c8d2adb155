"""Shared value types: conditioning direction and block covariance matrices."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import IndefiniteMatrixError, ValidationError
from .linalg import as_matrix, psd_project_check

# PSD verdicts on assembled/loaded covariances tolerate rounding from long
# block products; this is looser than the linalg kernel default on purpose.
COV_PSD_REL_TOL = 1e-9


class Direction(str, Enum):
    """Which endpoint the sequence is conditioned on: the first or last time."""

    FIRST = "first"
    LAST = "last"

    def anchor(self, n):
        """Time index of the conditioning state for horizon ``n``."""
        return 0 if self is Direction.FIRST else n


def as_direction(value):
    """Accept a Direction or its string value ('first' / 'last')."""
    if isinstance(value, Direction):
        return value
    try:
        return Direction(str(value).lower())
    except ValueError:
        raise ValidationError(f"direction must be 'first' or 'last', got {value!r}") from None


@dataclass(frozen=True)
class BlockCovariance:
    """Covariance matrix of a whole length-(n+1) sequence of d-vectors.

    The matrix has (n+1) block rows/columns of size d; ``block(i, j)`` is the
    covariance between the states at times i and j.  Construction
    symmetrizes the input and validates finiteness and positive
    semidefiniteness, so downstream code can rely on a clean matrix.
    """

    matrix: np.ndarray
    d: int
    rel_tol: float = COV_PSD_REL_TOL
    scale: float = field(init=False)

    def __post_init__(self):
        m = as_matrix(self.matrix, "covariance")
        if self.d < 1:
            raise ValidationError("block size d must be >= 1")
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"covariance must be square, got shape {m.shape}")
        if m.shape[0] == 0 or m.shape[0] % self.d != 0:
            raise ValidationError(
                f"covariance side {m.shape[0]} is not a positive multiple of d={self.d}"
            )
        is_psd, sym = psd_project_check(m, self.rel_tol)
        if not is_psd:
            min_eig = float(np.linalg.eigvalsh(sym).min())
            raise IndefiniteMatrixError(
                f"covariance is not positive semidefinite (min eigenvalue {min_eig:.6e})",
                min_eig,
            )
        sym.setflags(write=False)
        object.__setattr__(self, "matrix", sym)
        object.__setattr__(self, "scale", float(np.linalg.norm(sym)))

    @property
    def n(self):
        """Horizon: the sequence runs over times 0..n."""
        return self.matrix.shape[0] // self.d - 1

    def block(self, i, j):
        """Covariance block between times i and j (a d-by-d array)."""
        d = self.d
        return self.matrix[i * d:(i + 1) * d, j * d:(j + 1) * d]

    def gather(self, rows, cols):
        """Submatrix made of the blocks at the given time indices."""
        d = self.d
        ri = np.concatenate([np.arange(i * d, (i + 1) * d) for i in rows])
        ci = np.concatenate([np.arange(j * d, (j + 1) * d) for j in cols])
        return self.matrix[np.ix_(ri, ci)]

    def threshold(self, rel_tol):
        """Scale-aware pass threshold used by every classification check."""
        return rel_tol * (1.0 + self.scale)
