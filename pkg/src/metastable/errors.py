"""Exception types shared across the package."""


class MetastableError(Exception):
    """Base class for all package-specific errors."""


# --- landscape ---------------------------------------------------------------

class DegenerateCritical(MetastableError):
    """A critical point has a Hessian eigenvalue below the degeneracy tolerance."""


class NoConvergence(MetastableError):
    """Newton's method failed to locate any critical point from the seed grid."""


class FlowDiverged(MetastableError):
    """A gradient-flow trajectory left the expanded domain box."""


class FlowStalled(MetastableError):
    """Gradient-flow integration hit the time cap without capture."""


class UnresolvedConnection(MetastableError):
    """Endpoint capture failed while tracing a saddle's unstable orbit."""


# --- ldp ---------------------------------------------------------------------

class UnsupportedModel(MetastableError):
    """No evaluator exists for this noise model / operation combination."""


class NonConvergence(MetastableError):
    """Inner conjugate maximization failed to converge; carries the best lower bound."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class QuadratureFailure(MetastableError):
    """Adaptive quadrature error estimate exceeded the requested tolerance."""


class PreconditionViolated(MetastableError):
    """A certified-bound precondition (e.g. truncation radius) does not hold."""


class SingularSpeed(MetastableError):
    """The gradient vanishes along a path interior; speeds were floored."""


class MaxIterations(MetastableError):
    """Path optimizer hit its iteration cap; carries the best path found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


# --- transition graph --------------------------------------------------------

class DegenerateNode(MetastableError):
    """A Degenerate critical point cannot be used as a graph node."""


class StillInfinite(MetastableError):
    """Chain closure left infinite entries: the connection graph is disconnected."""


class NoProbePath(MetastableError):
    """No probe path connects the requested endpoints."""


# --- energy calculus ---------------------------------------------------------

class TooLarge(MetastableError):
    """Graph exceeds the exact-enumeration bound on non-target nodes."""


class InfeasibleGraph(MetastableError):
    """No transition forest / pruning exists on this graph."""


class DisconnectedNeighborGraph(MetastableError):
    """The basin-neighbor graph does not connect the start to the target."""


# --- simulation & stats ------------------------------------------------------

class Diverged(MetastableError):
    """An SGD iterate overflowed."""


class TooCensored(MetastableError):
    """Censoring fraction too high for a valid regression fit."""


class DegenerateDesign(MetastableError):
    """Regression design is degenerate (fewer than two distinct step-sizes)."""


class ConfigError(MetastableError):
    """Experiment manifest is missing or malformed."""
