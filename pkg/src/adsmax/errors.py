"""Exception types raised by the geometric operations.

Grouped loosely by pipeline stage.  Operations that the contracts describe
as "flagged" rather than fatal (budget exhaustion, non-convergence within
max_iters) return flagged results instead of raising; the classes here are
for genuine precondition violations.
"""


class AdsmaxError(Exception):
    """Base class for all package errors."""


# --- linear algebra / points ------------------------------------------------

class LightlikeDirection(AdsmaxError):
    """A direction expected to be spacelike or timelike is null."""


class OutOfRange(AdsmaxError):
    """A distance/angle argument left its admissible interval."""


class NotTimelike(AdsmaxError):
    """A timelike vector or timelike separation was required."""


class NotSpacelike(AdsmaxError):
    """A spacelike object was required (plane, surface step, direction)."""


class ChartSingularity(AdsmaxError):
    """A chart was evaluated at its singular locus."""


class DegenerateFrame(AdsmaxError):
    """Frame vectors fail orthonormality beyond tolerance."""


# --- boundary maps ----------------------------------------------------------

class DegenerateQuadruple(AdsmaxError):
    """Cross-ratio of a quadruple with coincident entries."""


class NotMonotone(AdsmaxError):
    """Sampled circle map is not strictly increasing."""


class RootNotBracketed(AdsmaxError):
    """Height equation has no root in the admissible band."""


class SearchBudgetExceeded(AdsmaxError):
    """Norm search ran out of evaluation budget."""


# --- hull / width -----------------------------------------------------------

class TooFewPoints(AdsmaxError):
    """Not enough points to build a 3D hull."""


class ClassificationAmbiguous(AdsmaxError):
    """Hull facet support plane is timelike beyond tolerance."""


class NonConvergent(AdsmaxError):
    """Iterative refinement failed to settle."""


# --- surface solver / fields ------------------------------------------------

class MaxItersExceeded(AdsmaxError):
    """Solver hit its iteration cap (results are returned flagged)."""


class SingularParallel(AdsmaxError):
    """Normal flow distance hits a focal point of the surface."""


class PlaneIntersectsSurface(AdsmaxError):
    """A test plane meant to be disjoint crosses the mesh."""


class AllUmbilical(AdsmaxError):
    """Principal directions undefined: surface is umbilical everywhere."""


class UmbilicalRegion(AdsmaxError):
    """Curvature-line tracing entered a near-umbilical region."""


class CurvatureAtOne(AdsmaxError):
    """A formula requiring lambda < 1 was evaluated at lambda >= 1."""


class DegenerateTangentPlane(AdsmaxError):
    """Tangent plane construction failed (non-spacelike or ill-conditioned)."""


# --- harness ----------------------------------------------------------------

class ConfigInvalid(AdsmaxError):
    """Experiment configuration failed schema validation."""


class InsufficientData(AdsmaxError):
    """Too few usable rows to fit empirical constants."""


class IoError(AdsmaxError):
    """Report emission failed (nothing to write, or the write itself)."""
