"""Exception hierarchy shared by every zacf module."""


class ZacfError(Exception):
    """Base class for all errors raised by zacf."""


class SizeError(ZacfError, ValueError):
    """A grid, region or FFT size is too small for the data it must hold."""


class ChannelMismatch(ZacfError, ValueError):
    pass


class ShapeMismatch(ZacfError, ValueError):
    pass


class NegativeDelta(ZacfError, ValueError):
    pass


class SingularCrossPower(ZacfError, ArithmeticError):
    """Some frequency bin of the cross-power matrix is singular (use OTSDF / delta > 0)."""


class RankDeficientConstraints(ZacfError, ArithmeticError):
    pass


class RankDeficientTraining(ZacfError, ArithmeticError):
    pass


class SizeCapExceeded(ZacfError, MemoryError):
    """The dense path would exceed its unknown-count cap; use the prox solvers."""


class DegenerateLabels(ZacfError, ValueError):
    """A two-class design was given samples from only one class."""


class MaxIterationsExceeded(ZacfError, RuntimeError):
    """Iteration budget exhausted. Carries the best iterate and its trace."""

    def __init__(self, message, template=None, trace=None):
        super().__init__(message)
        self.template = template
        self.trace = trace


class ZeroGradient(ZacfError, ArithmeticError):
    """Line search requested along a zero direction (the iterate is stationary)."""


class ZeroPlane(ZacfError, ValueError):
    pass


class EmptyScores(ZacfError, ValueError):
    pass


class DegenerateEyes(ZacfError, ValueError):
    pass


class FormatError(ZacfError, ValueError):
    """Malformed file. ``offset`` is the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class MissingTemplate(ZacfError, LookupError):
    pass
