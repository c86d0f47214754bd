"""Exception hierarchy shared by all gridpar modules."""


class GridparError(Exception):
    """Base class for every error raised by gridpar."""


class InvalidArgumentError(GridparError, ValueError):
    pass


class BoundsError(GridparError, IndexError):
    pass


class ResourceError(GridparError, MemoryError):
    pass


class FreedBufferError(GridparError, RuntimeError):
    """Raised on any access to a target buffer after target_free."""


class ContractViolation(GridparError, RuntimeError):
    pass


class LaunchError(GridparError, RuntimeError):
    """A kernel failed inside a launch; the original exception is chained."""


class NumericalDomainError(GridparError, ArithmeticError):
    """A kernel met a value outside its mathematical domain (e.g. rho <= 0)."""

    def __init__(self, message, site=None, coords=None, step=None):
        super().__init__(message)
        self.site = site
        self.coords = coords
        self.step = step

    def __str__(self):
        msg = super().__str__()
        extra = []
        if self.step is not None:
            extra.append(f"step={self.step}")
        if self.site is not None:
            extra.append(f"site={self.site}")
        if self.coords is not None:
            extra.append(f"coords={tuple(self.coords)}")
        return f"{msg} ({', '.join(extra)})" if extra else msg
