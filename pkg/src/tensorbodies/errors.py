"""Exception hierarchy shared by all modules."""


class TensorBodiesError(Exception):
    """Base class for library errors."""


class DimensionError(TensorBodiesError, ValueError):
    """Shapes or dimensions of inputs do not match."""


class NumericalError(TensorBodiesError, ArithmeticError):
    """A numeric routine failed to converge or met a singular input."""


class ComplexityError(TensorBodiesError):
    """A representation conversion exceeded its configured size cap."""


class PreconditionError(TensorBodiesError, ValueError):
    """An operation was called on an input outside its domain."""
