"""Exception types shared across the package.

The hierarchy mirrors the three data-dependent failure modes the CLI has to
tell apart: unreadable input, structurally invalid input (shape / positive
semidefiniteness), and inputs that are valid matrices but violate an
operation's precondition (e.g. fitting a model to a covariance that is not
conditionally Markov).
"""


class CmseqError(Exception):
    """Base class for all package-specific errors."""


class InputError(CmseqError):
    """A file or payload could not be parsed into the expected schema."""


class ValidationError(CmseqError, ValueError):
    """Structurally invalid data: bad shapes, non-finite entries, indefinite
    matrices, inconsistent block layouts."""


class IndefiniteMatrixError(ValidationError):
    """A matrix required to be positive semidefinite has a genuinely negative
    eigenvalue.  ``min_eigenvalue`` records the most negative one found."""

    def __init__(self, message, min_eigenvalue):
        super().__init__(message)
        self.min_eigenvalue = float(min_eigenvalue)


class PreconditionError(CmseqError):
    """An operation's precondition failed on otherwise valid data.  When the
    failure came from a classification check, ``report`` carries it."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
