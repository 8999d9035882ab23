"""Semantic exception hierarchy.

Every error raised on a documented failure path derives from
:class:`OrderestError` so the CLI can map computational failures to a
single exit status while argparse keeps usage errors separate.
"""


class OrderestError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(OrderestError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigurationError(OrderestError, ValueError):
    """An object was built with missing or inconsistent configuration."""


class DegenerateConditionalError(OrderestError):
    """The conditional density has a zero or non-finite normalizer."""

    def __init__(self, cond_value, detail=""):
        self.cond_value = cond_value
        msg = f"conditional density is degenerate at conditioning value {cond_value!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DivergenceError(OrderestError):
    """A required integral fails to converge (its tail mass keeps growing)."""


class NoSignChangeError(OrderestError):
    """Root bracketing exhausted its expansions without a sign change.

    Signals that the uniqueness assumptions on the first-order equation do
    not hold for the supplied model/loss combination.
    """


class InconsistentMonotonicityError(OrderestError):
    """Sampled shift values contradict the likelihood-ratio prediction.

    Usually indicates a broken user-supplied density implementation.
    """


class InvalidBoundsError(OrderestError, ValueError):
    """An envelope pair has lower > upper at some evaluated point."""


class IncompatibleEstimatorsError(OrderestError, ValueError):
    """Two estimators do not share the same mode/target."""


class NonexistentEstimatorError(OrderestError):
    """The requested named estimator does not exist for this model."""


class CatalogKeyError(OrderestError, KeyError):
    """No catalog entry matches the requested key."""


class SimulationOverflowError(OrderestError, FloatingPointError):
    """A simulated loss value overflowed (named replicate included)."""

    def __init__(self, replicate, detail=""):
        self.replicate = replicate
        msg = f"loss value overflowed at replicate {replicate}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DegenerateDataError(OrderestError, ValueError):
    """Paired data has a constant column (zero sample variance)."""
