"""Exception types raised across the package."""


class MqdxError(Exception):
    pass


class ConfigurationError(MqdxError, ValueError):
    """Invalid physical or numerical configuration."""


class ContractError(MqdxError, ValueError):
    """Arguments violate an operation's preconditions (shapes, normalization)."""


class UnsupportedKernelError(MqdxError, ValueError):
    pass


class InfeasibleBasisError(MqdxError, ValueError):
    pass


class DomainError(MqdxError, ValueError):
    pass


class SolverError(MqdxError, RuntimeError):
    def __init__(self, message, residual=None, time=None):
        super().__init__(message)
        self.residual = residual
        self.time = time


class ParseError(MqdxError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RestartError(MqdxError, ValueError):
    pass
