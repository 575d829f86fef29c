"""Exception hierarchy shared across the package."""


class RecessError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(RecessError):
    """A file's bytes do not match the declared on-disk format."""


class ParameterError(RecessError, ValueError):
    """An argument is outside its documented range."""


class ShapeError(RecessError, ValueError):
    """Array or image dimensions violate an operation's contract."""


class ContractError(RecessError):
    """A value handed to an operation breaks that operation's invariants."""


class NumericDomainError(RecessError):
    """Non-finite values where finite reals are required."""


class TransportError(RecessError):
    """An external predictor failed at the process/protocol level.

    Deliberately distinct from any classification result: a crashed or
    misbehaving predictor must never be read as a verdict.
    """


class DivergenceError(RecessError):
    """An iterative optimization produced a non-finite objective."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class TrainingDivergenceError(RecessError):
    """Training hit a non-finite loss; the message names the epoch."""
