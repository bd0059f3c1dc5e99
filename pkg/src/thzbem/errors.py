"""Exception types shared across the solver."""


class DomainError(ValueError):
    """Argument outside the supported domain of a special function."""


class SingularityError(ArithmeticError):
    """Evaluation requested exactly at a non-removable singularity."""


class MeshError(ValueError):
    """Invalid boundary discretization (open loop, self-intersection, ...)."""


class AssemblyError(RuntimeError):
    """Operator assembly failed its quadrature self-consistency check."""


class CompressionError(RuntimeError):
    """Low-rank compression is ineffective (rank exceeded half the size)."""


class SingularCirculantError(ArithmeticError):
    """Circulant solve requested with a (near-)zero eigenvalue."""


class SingularCoreError(ArithmeticError):
    """Woodbury core matrix is numerically singular."""


class LosslessMediumError(ValueError):
    """Operation requires a lossy medium (Im k < 0)."""


class ConfigError(ValueError):
    """Run configuration is missing a key or holds an invalid value."""
