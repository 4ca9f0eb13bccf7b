"""Exception types shared across the package.

The CLI maps these onto process exit codes: domain problems exit with 3,
convergence problems with 4.  Anything argparse rejects exits with 2.
"""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class BracketingError(DomainError):
    """A root bracket does not straddle a sign change."""


class ConvergenceError(RuntimeError):
    """An iteration budget was exhausted before reaching tolerance."""


class TruncationError(ConvergenceError):
    """A semi-infinite integral failed to settle within the panel budget.

    Carries the accumulated value so callers can inspect how far it got.
    """

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial
