"""Exception hierarchy.

Every error carries the name of the violated precondition in its class name so
the CLI can report it verbatim.
"""


class PolyspecError(Exception):
    """Base class for all package errors."""

    #: CLI exit code associated with the error family.
    exit_code = 2


class InvalidInput(PolyspecError, ValueError):
    pass


class NumericalFailure(PolyspecError, RuntimeError):
    exit_code = 3


# geometry
class TooFewVertices(InvalidInput):
    pass


class SelfIntersecting(InvalidInput):
    def __init__(self, i, j, msg=None):
        self.edges = (i, j)
        super().__init__(msg or f"edges {i} and {j} intersect")


class DuplicateVertex(InvalidInput):
    pass


class DegenerateGeometry(InvalidInput):
    pass


class MeshingFailed(InvalidInput):
    pass


class NotStructuralMesh(InvalidInput):
    pass


class TooSmall(InvalidInput):
    pass


class PathDegenerate(NumericalFailure):
    pass


class VertexCountMismatch(InvalidInput):
    pass


class DegeneratesAlongPath(InvalidInput):
    def __init__(self, triangle, interval, msg=None):
        self.triangle = triangle
        self.interval = interval
        super().__init__(
            msg
            or f"triangle {triangle} loses orientation for t in "
            f"[{interval[0]:.6g}, {interval[1]:.6g}]"
        )


class ParameterOutOfRange(InvalidInput):
    pass


# metric
class OutsideDomain(InvalidInput):
    pass


class StepTooLarge(InvalidInput):
    pass


# assembly
class DegenerateTriangle(InvalidInput):
    pass


# eigensolve
class NoConvergence(NumericalFailure):
    def __init__(self, residuals, msg=None):
        self.residuals = residuals
        super().__init__(msg or f"max residual {max(residuals):.3e} above tolerance")


class DimensionTooSmall(InvalidInput):
    pass


# deform
class KappaOutOfRange(InvalidInput):
    pass


class TooFewEigenvalues(InvalidInput):
    pass


class ResidualsTooLarge(InvalidInput):
    pass


class NoMinimumInBracket(NumericalFailure):
    pass


class SamplingFailed(NumericalFailure):
    pass


# oracle
class InvalidRational(InvalidInput):
    pass


class InvalidIndices(InvalidInput):
    pass
