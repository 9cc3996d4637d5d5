"""Exception hierarchy shared by all qsl modules."""


class QslError(Exception):
    """Base class for all errors raised by qsl."""


class LatticeRangeError(QslError, IndexError):
    """A lattice index lies outside the window, or a stencil needs a missing neighbour."""


class ValidationError(QslError, ValueError):
    """Invalid user input (lattice parameters, potentials, configuration)."""


class IngestionError(ValidationError):
    """A file could not be parsed; carries the offending path and line when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ContractError(QslError, ValueError):
    """Arguments are individually valid but incompatible (e.g. different lattices)."""


class PreconditionError(QslError, ValueError):
    """An operation was called outside its domain (e.g. real lambda where Im != 0 is needed)."""


class NumericFailure(QslError, ArithmeticError):
    """A computation produced non-finite values or failed an internal consistency check."""


class StaleEigenvalueError(PreconditionError):
    """The supplied eigenvalue does not make the forward and decaying solutions match."""
