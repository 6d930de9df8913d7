"""Exception hierarchy shared by all rittlab modules."""


class RittlabError(Exception):
    """Base class for every error raised by rittlab."""


class SingularResolvent(RittlabError):
    """The resolvent point is numerically inside the spectrum."""


class NoConvergence(RittlabError):
    """An iterative procedure hit its iteration or refinement cap."""


class BranchViolation(RittlabError):
    """Spectrum meets the closed negative real axis (principal branch undefined)."""


class DefectiveZero(RittlabError):
    """Zero is an eigenvalue but is not semisimple."""


class DegenerateHull(RittlabError):
    """Tangency arcs of a Stolz-type domain overlap."""


class NonConvex(RittlabError):
    """A polygon vertex cycle is not convex."""


class MeetOutsideDisc(RittlabError):
    """Two sector boundary rays meet outside the punctured unit disc."""


class PreconditionSpectrum(RittlabError):
    """Operator spectrum is not contained in the required region."""


class NonCommuting(RittlabError):
    """A pair of operators that must commute does not."""


class SpectralAngle(RittlabError):
    """No admissible contour angle exists for a sectorial operator."""


class OnContour(RittlabError):
    """Evaluation point lies on (or too close to) an integration contour."""


class DecayRefuted(RittlabError):
    """An H-infinity-zero decay claim failed on the sample."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class NotPowerBounded(RittlabError):
    pass


class DefectiveUnimodularEigenvalue(RittlabError):
    pass


class NotConverged(RittlabError):
    """A truncated series has a tail increment above threshold."""


class TooLarge(RittlabError):
    """Requested exact enumeration exceeds the configured cap."""


class ResourceGuard(RittlabError):
    """A nested construction would exceed the configured size cap."""


class ConfigInvalid(RittlabError):
    """Experiment configuration failed validation.

    ``errors`` maps field names to diagnostics.
    """

    def __init__(self, errors):
        self.errors = dict(errors)
        lines = "; ".join(f"{k}: {v}" for k, v in self.errors.items())
        super().__init__(f"invalid configuration: {lines}")
