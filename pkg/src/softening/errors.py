class SofteningError(Exception):
    """Base class for estimation and simulation failures."""


class EstimationError(SofteningError, ValueError):
    """An estimator cannot produce a value for this input."""


class GridError(SofteningError, ValueError):
    """A quadrature or density grid does not cover the mass it must."""


class ExtinctionError(SofteningError, RuntimeError):
    """Every realization of an ensemble escaped in a single step."""
