"""Exception types shared across the package."""


class KmglError(Exception):
    """Base class for all library-specific errors."""


class DimensionError(KmglError, ValueError):
    """Shapes or lengths of inputs do not line up."""


class InvalidWeightError(KmglError, ValueError):
    """Edge weights are negative or not finite."""


class DegenerateGraphError(KmglError):
    """Graph has no edges where at least one is required."""


class InvalidKernelError(KmglError):
    """Kernel matrix is not positive definite, even after jitter escalation."""


class SingularFilterError(KmglError):
    """Masked filter system is singular (alpha = beta = 0 with a partial mask)."""


class ConfigurationError(KmglError):
    """Caller-supplied configuration is unusable (e.g. fewer signals than clusters)."""


class DegenerateClusteringError(KmglError):
    """Clustering cannot proceed (empty cluster that cannot be repaired, or no observed data)."""


class InconsistentStateError(KmglError):
    """A cluster state fails internal consistency checks."""
