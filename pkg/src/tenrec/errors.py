"""Exception and warning types raised across the package."""


class TenrecError(Exception):
    """Base class for every error raised by tenrec."""


class InvalidTensor(TenrecError, ValueError):
    pass


class ShapeMismatch(TenrecError, ValueError):
    pass


class NonRealResult(TenrecError, ArithmeticError):
    """Inverse FFT left an imaginary part above tolerance."""


class NumericalFailure(TenrecError, ArithmeticError):
    pass


class InvalidTheta(TenrecError, ValueError):
    pass


class WeightOrderViolation(TenrecError, ValueError):
    pass


class WeightSymmetryViolation(TenrecError, ValueError):
    """Weight columns for conjugate Fourier slices differ."""


class InvalidConfig(TenrecError, ValueError):
    pass


class PatchTooLarge(TenrecError, ValueError):
    pass


class NotEnoughPatches(TenrecError, ValueError):
    pass


class UncoveredPixels(TenrecError, RuntimeError):
    pass


class GroupSolveFailure(NumericalFailure):
    """A per-group solve failed; ``group_index`` and ``reference`` identify it."""

    def __init__(self, message, group_index, reference):
        super().__init__(message)
        self.group_index = group_index
        self.reference = reference


class FormatError(TenrecError, ValueError):
    pass


class InconsistentFrameSize(FormatError):
    pass


class TooSmall(TenrecError, ValueError):
    pass


class MaxItersExceeded(RuntimeWarning):
    """Solver hit ``max_iters``; the last iterate is returned unconverged."""


class GroupSizeClamped(UserWarning):
    pass
