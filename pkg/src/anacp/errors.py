"""Exception types raised across the library."""


class AnacpError(Exception):
    """Base class for all library-specific errors."""


# --- feature files / streams ---

class BadMagic(AnacpError):
    """File does not start with the expected magic bytes."""


class TruncatedFile(AnacpError):
    """File payload is shorter than its header promises."""


class LabelOutOfRange(AnacpError):
    """A label is >= the declared class count."""


class TooManyTasks(AnacpError):
    """Requested more tasks than there are classes."""


# --- linear algebra ---

class DimensionMismatch(AnacpError):
    """Operand shapes are incompatible."""


class EigDecompositionFailure(AnacpError):
    """Symmetric eigendecomposition did not converge."""


class SingularSystem(AnacpError):
    """Unregularized solve requested on a rank-deficient system."""


class ShrinkingTargets(AnacpError):
    """Target width smaller than the already-accumulated cross matrix."""


# --- repulsion ---

class ZeroVector(AnacpError):
    """An input vector has zero norm where a direction is required."""


class NonOrthonormalBasis(AnacpError):
    """Supplied basis vectors are not mutually orthonormal."""


class TooFewClasses(AnacpError):
    """Operation needs at least two seen classes."""


# --- learners ---

class StatsOutOfSync(AnacpError):
    """Task labels reference classes missing from the statistics."""


class NotFitted(AnacpError):
    """Model used before any training data was absorbed."""


class UnknownClass(AnacpError):
    """A class index has no stored statistics."""


class RepeatedClass(AnacpError):
    """A task reintroduces a class the learner has already seen."""


class UnknownTask(AnacpError):
    """Task id outside the range of learned tasks."""


class DegenerateBaseline(AnacpError):
    """Baseline accuracy outside [0, 100)."""
