class CurveError(ValueError):
    """Base class for invalid curves and invalid operations on them."""


class TooFewVertices(CurveError):
    pass


class DegenerateEdge(CurveError):
    pass


class CoincidentEndpoints(CurveError):
    pass


class LengthMismatch(CurveError):
    pass


class DimMismatch(CurveError):
    pass


class StencilExhausted(CurveError):
    pass


class CurveFileError(CurveError):
    pass
