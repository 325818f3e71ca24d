"""Exception hierarchy shared by every multistop module."""


class MultiStopError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(MultiStopError, ValueError):
    pass


class NonConvergent(MultiStopError, ArithmeticError):
    pass


class PoleAtDeltaOne(MultiStopError, ValueError):
    """Raised when a conformal block is requested at (or too close to) Delta = 1."""

    def __init__(self, delta, index=None):
        self.delta = delta
        self.index = index
        where = "" if index is None else f" at index {index}"
        super().__init__(f"conformal block has a pole at Delta = 1 (got {delta!r}{where})")


class DivergenceAtZero(MultiStopError, ValueError):
    pass


class OutOfTableRange(MultiStopError, ValueError):
    pass


class InvalidDelta(MultiStopError, ValueError):
    pass


class DeltaMismatch(MultiStopError, ValueError):
    pass


class NotEnoughData(MultiStopError, RuntimeError):
    pass


class ConfigError(MultiStopError, ValueError):
    pass


class InsufficientRuns(MultiStopError, ValueError):
    pass


class ParseError(MultiStopError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)


class NoRowForG(MultiStopError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "no row for g"


class RunFailed(MultiStopError, RuntimeError):
    """A single search run inside an experiment failed."""

    def __init__(self, seed, cause):
        self.seed = seed
        self.cause = cause
        super().__init__(f"run with seed {seed} failed: {type(cause).__name__}: {cause}")

    def __reduce__(self):
        return (type(self), (self.seed, self.cause))
