"""Exception hierarchy shared by all ohmwell modules."""


class OhmwellError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(OhmwellError, ValueError):
    pass


class InvalidDomainError(OhmwellError, ValueError):
    pass


class CoercivityError(OhmwellError, ValueError):
    """A coefficient is not bounded below by a positive constant."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ExtrapolationError(OhmwellError, ValueError):
    pass


class ShapeError(OhmwellError, ValueError):
    pass


class ResolutionError(OhmwellError, ValueError):
    pass


class DomainError(OhmwellError, ValueError):
    pass


class AlignmentError(OhmwellError, ValueError):
    pass


class PreconditionError(OhmwellError, ValueError):
    pass


class GrowthCertificateError(OhmwellError, RuntimeError):
    """The truncated right-hand side left its ball: declared growth data is false."""


class StiffnessError(OhmwellError, RuntimeError):
    pass


class DivergenceError(OhmwellError, RuntimeError):
    def __init__(self, message, last_time=None, last_state=None):
        super().__init__(message)
        self.last_time = last_time
        self.last_state = last_state


class ComparabilityError(OhmwellError, ValueError):
    pass


class ConfigParseError(ConfigurationError):
    """Raised for malformed configuration files; carries the key path and line."""

    def __init__(self, message, path="", line=None):
        where = path or "<root>"
        if line is not None:
            where = f"{where} (line {line})"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
