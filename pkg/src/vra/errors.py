class VRAError(Exception):
    """Base class for harness errors."""


class InvalidSizeError(VRAError, ValueError):
    pass


class DomainError(VRAError, ValueError):
    pass


class InfeasibleError(VRAError, ValueError):
    pass


class ConfigError(VRAError, ValueError):
    pass


class InputError(VRAError, ValueError):
    pass


class CredentialError(VRAError):
    pass


class TransportError(VRAError):
    pass


class MockMisuseError(VRAError):
    pass
