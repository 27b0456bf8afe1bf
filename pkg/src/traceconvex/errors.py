"""Exception hierarchy shared by every module of the package."""


class TraceConvexError(Exception):
    """Base class for all errors raised by traceconvex."""


class NotHermitian(TraceConvexError, ValueError):
    pass


class NotSelfAdjoint(NotHermitian):
    pass


class NotPSD(TraceConvexError, ValueError):
    pass


class SingularMatrix(TraceConvexError, ValueError):
    pass


class SingularOutput(SingularMatrix):
    """A channel output lost strict positivity needed by a divergence."""


class NoConvergence(TraceConvexError, RuntimeError):
    pass


class InvalidExponent(TraceConvexError, ValueError):
    pass


class DimensionMismatch(TraceConvexError, ValueError):
    pass


class OutOfRegion(TraceConvexError, ValueError):
    pass
