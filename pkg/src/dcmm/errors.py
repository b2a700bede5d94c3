"""Exception and warning types raised across the package.

Errors split into two families so the CLI can map them onto exit codes:
``ValidationError`` for bad inputs or invalid parameter sets, and
``PipelineError`` for numerical failures inside estimation.
"""


class DcmmError(Exception):
    """Base class. ``stage`` is filled in by the estimation pipeline."""

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class ValidationError(DcmmError, ValueError):
    pass


class PipelineError(DcmmError, ArithmeticError):
    pass


# -- model ------------------------------------------------------------------

class ShapeMismatch(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class EntryOutOfRange(ValidationError):
    pass


class NotInCone(ValidationError):
    pass


class ZeroRow(ValidationError):
    pass


class IndivisibleN(ValidationError):
    pass


class InvalidAdjacency(ValidationError):
    pass


class ParseError(ValidationError):
    pass


# -- spectral ---------------------------------------------------------------

class NonPositiveDegree(PipelineError):
    pass


class EigenFailure(PipelineError):
    pass


class FirstEigvecNearZero(PipelineError):
    def __init__(self, index, msg=None):
        self.index = index
        super().__init__(msg or f"leading eigenvector is ~0 at node {index}")


# -- vertex hunting ---------------------------------------------------------

class EmptyCluster(PipelineError):
    def __init__(self, k, msg=None):
        self.k = k
        super().__init__(msg or f"no rows within radius phi of vertex {k}")


class KMeansDegenerate(PipelineError):
    pass


# -- estimation -------------------------------------------------------------

class NegativeUnderRoot(PipelineError):
    def __init__(self, k, value):
        self.k = k
        self.value = value
        super().__init__(f"b1 radicand for vertex {k} is {value:.3g} <= 0")


class SingularVertexMatrix(PipelineError):
    pass


class ZeroDenominator(PipelineError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"pi_hat_i . b1_hat is not positive at node {index}")


class KTooLarge(ValidationError):
    pass


# -- lower bounds -----------------------------------------------------------

class ConeViolation(ValidationError):
    pass


class BlockSizeMismatch(ValidationError):
    pass


class DegenerateNull(ValidationError):
    pass


# -- experiments ------------------------------------------------------------

class NonPositiveInput(ValidationError):
    pass


class DegenerateX(ValidationError):
    pass


# -- warnings ---------------------------------------------------------------

class OverlapWarning(UserWarning):
    """Vertex-hunting clusters intersect (radius phi likely too large)."""


class DegenerateGapWarning(UserWarning):
    """|lambda_k| and |lambda_{k+1}| are too close to order reliably."""


class AllClippedWarning(UserWarning):
    """A membership row was clipped to zero and replaced by the uniform row."""
