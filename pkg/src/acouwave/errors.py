"""Exception hierarchy shared by all modules."""


class AcouwaveError(Exception):
    """Base class for every error raised by the package."""


class DomainError(AcouwaveError, ValueError):
    """An argument lies outside the admissible set (negative length, bad index, ...)."""


class DimensionError(AcouwaveError, ValueError):
    """Array shapes or grids do not match."""


class SolverError(AcouwaveError, ArithmeticError):
    """A linear solve failed.

    :param t: time at which the failure occurred (``None`` if not applicable)
    :param condition: condition number estimate of the offending matrix
    """

    def __init__(self, msg, t=None, condition=None):
        super().__init__(msg)
        self.t = t
        self.condition = condition


class ConvergenceError(AcouwaveError, ArithmeticError):
    """An iteration did not converge. The partial report is attached."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class EstimationError(AcouwaveError, ArithmeticError):
    """Numerical estimation of an embedding constant failed.

    :param diagnostics: dict with the objective history of the failed search
    """

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class OracleError(AcouwaveError, ArithmeticError):
    """A reference solver failed (e.g. its fixed-point loop did not converge)."""


class ConfigError(AcouwaveError, ValueError):
    """Invalid run configuration.

    :param line: 1-based line in the configuration file, when known
    """

    def __init__(self, msg, line=None):
        self.line = line
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
