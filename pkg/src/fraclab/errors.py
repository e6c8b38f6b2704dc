"""Exception types shared by the fraclab modules."""


class DomainError(ValueError):
    """A parameter lies outside the set where a formula is defined."""


class ArgumentError(ValueError):
    """Inconsistent or malformed arguments (grid mismatch, bad sizes, ...)."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    The best iterate found so far is attached as ``report`` (may be None),
    and ``stage`` names the pipeline stage that failed.
    """

    def __init__(self, message, report=None, stage=None):
        super().__init__(message)
        self.report = report
        self.stage = stage
