"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input -> 2, degenerate data
(single-arm samples, failed splits) -> 3, singular designs -> 4.
"""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class SingleArmError(ValueError):
    """A sample contains units from only one treatment arm."""


class DegenerateSplitError(RuntimeError):
    """A sample split left one arm unrepresented after repeated retries."""


class SingularDesignError(RuntimeError):
    """A regression design is rank deficient at the working tolerance."""
