class Error(Exception):
    """General qrflow exception."""


class ConfigError(Error):
    """A configuration value or file is invalid."""


class ParseError(Error):
    """A text input could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GraphError(Error, ValueError):
    """A graph is invalid, or a vector does not match its dimensions."""


class ImbalancedMassError(Error, ValueError):
    """A mass vector does not sum to zero."""


class FactorizationError(Error):
    """A Cholesky factorization or downdate lost positive definiteness."""


class InfeasibleError(Error):
    """The transport problem has no feasible flow."""


class DecompositionError(Error):
    """A flow or pair of decompositions cannot be decomposed."""


class GenerationError(Error):
    """A random instance could not be generated."""


class ConvergenceError(Error):
    """A solve needed by an experiment did not converge."""
