"""Gaussian conditionally-Markov, reciprocal, and Markov sequences.

Dynamic models conditioned on an endpoint state, exact covariance assembly,
sampling that tolerates singular (even zero) noise covariances,
pseudoinverse-based classification of covariance functions, model fitting,
and Markov-plus-independent-vector decompositions.
"""

from .characterize import (ClassificationReport, cm_oracle, is_cm,
                           is_cm_via_markov, is_interval_cm, is_markov,
                           is_reciprocal, is_reciprocal_via_markov)
from .core import BlockCovariance, Direction
from .decompose import build_cm_covariance, canonical_gamma, markov_part_check
from .errors import (CmseqError, IndefiniteMatrixError, InputError,
                     PreconditionError, ValidationError)
from .fit import fit_cm, fit_reciprocal
from .linalg import PsdFactor, mp_inverse, psd_factor, psd_project_check
from .model import (CmModel, SingularityReport, TrajectoryEnsemble,
                    assemble_g, boundary_nonsingular, covariance_of,
                    interior_times, is_reciprocal_model, noise_to_state,
                    sample, singularity_report)

__version__ = "0.1.0"

__all__ = [
    "BlockCovariance",
    "ClassificationReport",
    "CmModel",
    "CmseqError",
    "Direction",
    "IndefiniteMatrixError",
    "InputError",
    "PreconditionError",
    "PsdFactor",
    "SingularityReport",
    "TrajectoryEnsemble",
    "ValidationError",
    "assemble_g",
    "boundary_nonsingular",
    "build_cm_covariance",
    "canonical_gamma",
    "cm_oracle",
    "covariance_of",
    "fit_cm",
    "fit_reciprocal",
    "interior_times",
    "is_cm",
    "is_cm_via_markov",
    "is_interval_cm",
    "is_markov",
    "is_reciprocal",
    "is_reciprocal_model",
    "is_reciprocal_via_markov",
    "markov_part_check",
    "mp_inverse",
    "noise_to_state",
    "psd_factor",
    "psd_project_check",
    "sample",
    "singularity_report",
]
