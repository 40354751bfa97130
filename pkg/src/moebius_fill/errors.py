"""Exception hierarchy.

Every error carries a stable ``code`` string and an ``exit_status`` used by the
CLI when it serialises failures as JSON.
"""


class GeometryError(Exception):
    code = "GeometryError"
    exit_status = 2

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details

    def to_json(self):
        return {"error": self.code, "message": str(self), "details": self.details}


# semimetric_core
class AsymmetricMatrix(GeometryError):
    code = "AsymmetricMatrix"


class NonzeroDiagonal(GeometryError):
    code = "NonzeroDiagonal"


class NonpositiveOffDiagonal(GeometryError):
    code = "NonpositiveOffDiagonal"


class TooFewPoints(GeometryError):
    code = "TooFewPoints"


class DiameterNotOne(GeometryError):
    code = "DiameterNotOne"


class MissingAntipode(GeometryError):
    code = "MissingAntipode"

    def __init__(self, point, message=""):
        super().__init__(message or f"point {point!r} has no antipode", point=point)
        self.point = point


class NonDistinctPoints(GeometryError):
    code = "NonDistinctPoints"


class DimensionMismatch(GeometryError):
    code = "DimensionMismatch"


class NotMoebiusEquivalent(GeometryError):
    code = "NotMoebiusEquivalent"


# moebius_space
class BaseMismatch(GeometryError):
    code = "BaseMismatch"


class NonfiniteState(GeometryError):
    code = "NonfiniteState"


class BudgetExceeded(GeometryError):
    code = "BudgetExceeded"
    exit_status = 3


class RayConstructionFailed(GeometryError):
    code = "RayConstructionFailed"


class NotAntipodalWithinTol(GeometryError):
    code = "NotAntipodalWithinTol"


class PairwiseConditionViolated(GeometryError):
    code = "PairwiseConditionViolated"


# rough_isometry
class ExactBudgetExceeded(BudgetExceeded):
    code = "ExactBudgetExceeded"


class NotAMetric(GeometryError):
    code = "NotAMetric"


# filling / boundary
class NotACover(GeometryError):
    code = "NotACover"


class AmbiguousShadow(GeometryError):
    code = "AmbiguousShadow"


class RayPointUnmapped(GeometryError):
    code = "RayPointUnmapped"


class ComponentCountMismatch(GeometryError):
    code = "ComponentCountMismatch"


# gallery
class OddNRequiresRepair(GeometryError):
    code = "OddNRequiresRepair"


class EtaTooLarge(GeometryError):
    code = "EtaTooLarge"


# cli
class SchemaMismatch(GeometryError):
    code = "SchemaMismatch"
