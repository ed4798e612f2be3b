"""Exception hierarchy shared across the toolkit.

Every error raised deliberately by this package derives from
:class:`StableselError`, so callers can catch one type at the boundary.
Errors carry the quantities a caller needs to diagnose the failure
(eigenvalue ratios, acceptance rates, iteration indices) as attributes
rather than only as formatted text.
"""

from __future__ import annotations


class StableselError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(StableselError):
    """An argument violated a documented precondition."""


class DimensionError(ContractError):
    """Array shapes or lengths are inconsistent."""


class SingularMatrixError(StableselError):
    """A matrix required to be SPD was singular or ill-conditioned.

    Attributes
    ----------
    ratio : float
        min-eigenvalue / max-eigenvalue of the offending matrix.
    """

    def __init__(self, ratio: float, message: str | None = None):
        self.ratio = float(ratio)
        if message is None:
            message = f"matrix is singular or ill-conditioned (eigenvalue ratio {self.ratio:.3e})"
        super().__init__(message)


class GenerationError(StableselError):
    """Rejection sampling exhausted its attempt budget.

    Attributes
    ----------
    acceptance_rate : float
        Fraction of candidate rows accepted before giving up.
    attempts : int
        Number of candidate rows drawn.
    """

    def __init__(self, acceptance_rate: float, attempts: int):
        self.acceptance_rate = float(acceptance_rate)
        self.attempts = int(attempts)
        super().__init__(
            f"rejection sampler exhausted {attempts} attempts "
            f"(acceptance rate {acceptance_rate:.3e}); "
            "the environment bias is too strong for the requested sample size"
        )


class DivergenceError(StableselError):
    """An iterative optimizer produced a non-finite loss.

    Attributes
    ----------
    iteration : int
        Zero-based iteration at which the loss became non-finite.
    """

    def __init__(self, iteration: int):
        self.iteration = int(iteration)
        super().__init__(f"optimizer diverged (non-finite loss at iteration {iteration})")


class TheoryViolationError(StableselError):
    """An exhaustive check contradicted a structural guarantee.

    Raised by the discrete oracle when, e.g., the minimal stable variable
    set is not unique or the stable sets do not form a superset lattice.
    Seeing this error means either the input table violates a precondition
    (such as strict positivity) or there is a bug.
    """


class ConfigError(StableselError):
    """A run configuration is malformed or internally inconsistent."""
