"""Exception hierarchy shared by all voxpopuli modules."""


class VoxPopuliError(Exception):
    """Base class for every error raised by this package."""


class DomainError(VoxPopuliError, ValueError):
    """An argument lies outside the domain of a function (e.g. q outside (0, 1))."""


class ParameterError(VoxPopuliError, ValueError):
    """Distribution parameters violate their invariants."""


class IngestError(VoxPopuliError):
    """Entry data could not be read or contained no usable rows."""


class EstimationError(VoxPopuliError, ValueError):
    """Data is unsuitable for the requested estimator."""
