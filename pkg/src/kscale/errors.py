"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DataError(ValueError):
    """A data file is malformed (parse failures carry the line number)."""


class NumericError(RuntimeError):
    """A numeric routine failed to produce a usable result."""


class DegenerateKernelError(NumericError):
    """A kernel row lost all off-diagonal mass (bandwidth far too small)."""


class SelectionFailedError(NumericError):
    """A scale-selection rule found no admissible answer."""
