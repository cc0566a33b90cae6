"""Exception hierarchy shared across the package."""


class FinslerError(Exception):
    """Base class for all package-specific errors."""


class DomainError(FinslerError):
    """A point lies outside the rectangle/domain it is evaluated on."""


class InputError(FinslerError):
    """Invalid or inconsistent user input (data, flags, hypotheses)."""


class MetricError(FinslerError):
    """Degenerate metric data (e.g. singular matrix field at a node)."""


class ProbeError(FinslerError):
    """A sub/superdifferential probe cannot be formed (ball exits domain)."""


class GeometryError(FinslerError):
    """A required ball/region does not fit inside the domain."""


class CoercivityError(FinslerError):
    """No coercivity threshold found below the search cap."""


class ConvergenceError(FinslerError):
    """Iterative solver failed to converge within its sweep budget."""


class BudgetError(FinslerError):
    """Problem size exceeds a brute-force oracle's budget."""


class SchemaError(FinslerError):
    """Config file violates the expected schema."""
