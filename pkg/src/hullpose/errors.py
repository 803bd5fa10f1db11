"""Exception types shared across the package."""


class HullposeError(Exception):
    pass


class DegenerateCluster(HullposeError):
    """Fewer than two distinct planar points, or no lateral extent seen from the sensor."""


class DegeneratePolygon(HullposeError):
    pass


class OriginInsideHull(HullposeError):
    """The sensor origin lies inside or on the hull, so no viewing wedge exists."""


class NoVisibleEdge(HullposeError):
    pass


class EstimationFailed(HullposeError):
    """Every candidate orientation failed edge selection."""


class FormatError(HullposeError):
    pass


class EmptyScan(HullposeError):
    pass


class EmptyInput(HullposeError):
    pass
