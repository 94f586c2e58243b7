"""Exception hierarchy shared by all modules."""


class WDistillError(Exception):
    """Base class for library errors."""


class ZeroVector(WDistillError, ValueError):
    pass


class ZeroBranch(WDistillError):
    """The measurement outcome annihilates the state."""


class DegenerateState(WDistillError):
    """The determinant pencil collapses (product or biseparable input)."""


class NotWClass(WDistillError):
    pass


class DomainError(WDistillError, ValueError):
    pass


class OutOfRange(WDistillError, ValueError):
    pass


class NoRoot(WDistillError):
    """No first-party element satisfies the annihilation condition."""


class ConstructionMismatch(WDistillError):
    """A constructed plan failed its own end-to-end validation."""


class InvalidElement(WDistillError, ValueError):
    pass


class DegenerateOperator(WDistillError, ValueError):
    pass


class PreconditionError(WDistillError, ValueError):
    pass
