"""Exception types shared across the package."""


class DgError(Exception):
    """Base class for all package-specific errors."""


class InvalidMeshError(DgError):
    """Mesh construction input is unusable (too few cells, empty extent, ...)."""


class ConfigurationError(DgError):
    """A configuration value is out of range or inconsistent."""


class NonphysicalStateError(DgError):
    """Density or pressure lost positivity.

    Carries enough context to locate the failure.
    """

    def __init__(self, message, element=None, time=None, step=None):
        super().__init__(message)
        self.element = element
        self.time = time
        self.step = step


class ContractViolationError(DgError):
    """An argument violated a documented precondition."""


class DeserializationError(DgError):
    """A serialized artifact is malformed; `offset` points at the failure."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class TrainingDivergedError(DgError):
    """Network training lost progress; `epoch` is the failing epoch."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
