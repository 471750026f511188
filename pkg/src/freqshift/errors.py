class ConfigurationError(ValueError):
    """Invalid parameters or configuration (CLI exit code 1)."""


class NotIdentifiableError(ValueError):
    """The data or configuration carries no information about the shift."""


class QuadratureError(ArithmeticError):
    """Quadrature failed to reach its tolerance before the node cap."""

    def __init__(self, message, *, nodes=None, est_abs_error=None, tolerance=None):
        super().__init__(message)
        self.nodes = nodes
        self.est_abs_error = est_abs_error
        self.tolerance = tolerance


class BatchFormatError(ValueError):
    """Malformed batch CSV; ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
