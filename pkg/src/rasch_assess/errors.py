"""Exception types shared across the package."""


class RaschAssessError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RaschAssessError):
    """Malformed or inconsistent input data (CSV files, catalogs, reports)."""


class InsufficientDataError(RaschAssessError):
    """Too little usable data to calibrate (fewer than 2 non-extreme
    persons/items, or fewer than 2 observed categories)."""


class DegenerateCellError(RaschAssessError):
    """A residual was requested for a cell with non-positive model variance."""
