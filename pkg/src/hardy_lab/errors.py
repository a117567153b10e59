"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class HardyLabError(Exception):
    exit_code = 3


class ParameterError(HardyLabError, ValueError):
    exit_code = 2


class CatalogError(ParameterError):
    pass


class DomainError(ParameterError):
    pass


class AdmissibilityError(ParameterError):
    pass


class AssemblyError(ParameterError):
    pass


class NumericalError(HardyLabError, ArithmeticError):
    exit_code = 3


class IntegrationError(NumericalError):
    def __init__(self, message: str, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class PairingError(NumericalError):
    pass


class DegenerateInputError(NumericalError):
    pass
