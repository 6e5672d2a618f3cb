"""Exception types shared across the package."""


class CStarFrameError(Exception):
    """Base class for all package-specific errors."""


class StructuralError(CStarFrameError, ValueError):
    """Operands have incompatible shapes, ranks, or algebra specs."""


class DomainError(CStarFrameError, ValueError):
    """Input lies outside the mathematical domain of the operation."""


class ConsistencyError(CStarFrameError, RuntimeError):
    """Two independent computational routes disagree beyond tolerance."""


class GenerationError(CStarFrameError, RuntimeError):
    """A randomized construction exhausted its retry budget."""


class ParseError(CStarFrameError, ValueError):
    """Malformed or schema-violating serialized data."""
