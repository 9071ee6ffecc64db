"""Exception types shared across the package."""


class IsoformError(Exception):
    """Base class for all errors raised by this package."""


class MeshTopologyError(IsoformError, ValueError):
    """The triangle list does not describe an oriented manifold surface."""


class DegenerateRealizationError(IsoformError, ValueError):
    """Vertex positions violate a non-degeneracy requirement."""


class SolverError(IsoformError, RuntimeError):
    """A linear solve failed or did not meet its tolerance."""


class ExpressionError(IsoformError, ValueError):
    """A boundary-value expression could not be parsed or evaluated."""


class IncompatibleDataError(IsoformError, ValueError):
    """Inputs are mutually inconsistent (wrong mesh, wrong shape, ...)."""
