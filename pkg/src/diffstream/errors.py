"""Exception hierarchy for the diffstream package.

Every error raised by the library derives from :class:`DiffStreamError` so
callers (and the CLI) can catch one type. Subclasses mirror the failure
modes of the individual subsystems.
"""


class DiffStreamError(Exception):
    """Base class for all diffstream errors."""


# -- noise schedule ----------------------------------------------------------

class InvalidRange(DiffStreamError, ValueError):
    """Schedule construction parameters outside their legal bounds."""


class TimestepOutOfRange(DiffStreamError, IndexError):
    """A timestep index fell outside [1..M]."""


class ShapeMismatch(DiffStreamError, ValueError):
    """Array arguments that must agree in shape do not."""


# -- timestep plans ----------------------------------------------------------

class InvalidCount(DiffStreamError, ValueError):
    """A step or frame count outside its legal bounds."""


class InvalidFractions(DiffStreamError, ValueError):
    """Region fractions must be positive and sum to one."""


class InvalidSkip(DiffStreamError, ValueError):
    """Skip factor below one."""


# -- denoising ---------------------------------------------------------------

class NonDecreasingStep(DiffStreamError, ValueError):
    """A deterministic update was asked to move to an equal or higher timestep."""


class SingularSystem(DiffStreamError, RuntimeError):
    """The dense conditioning solve failed; should be impossible for a valid spec."""


# -- attention analysis ------------------------------------------------------

class BadMagic(DiffStreamError, ValueError):
    """File does not start with the expected magic bytes."""


class BadShape(DiffStreamError, ValueError):
    """Attention matrix is not square over the frame axis."""


class NonFiniteValue(DiffStreamError, ValueError):
    """A payload value is NaN or infinite."""


class NegativeValue(DiffStreamError, ValueError):
    """Attention scores must be nonnegative."""


class EmptyRegion(DiffStreamError, ValueError):
    """A key region has zero width."""


# -- stream files & probes ---------------------------------------------------

class TruncatedFile(DiffStreamError, ValueError):
    """File payload ends mid-record or mid-header."""


class CountMismatch(DiffStreamError, ValueError):
    """Declared frame count disagrees with the payload length."""


class EmptyStream(DiffStreamError, ValueError):
    """Operation requires at least one frame."""


class SinkFailure(DiffStreamError, RuntimeError):
    """The output sink raised; carries the number of frames already written."""

    def __init__(self, message: str, frames_written: int = 0):
        super().__init__(message)
        self.frames_written = frames_written
