"""Exception types raised by the library.

Every error carries a short machine-readable ``code`` used by the CLI to
build JSON error objects and pick an exit status.
"""


class MinsurfError(Exception):
    code = "error"
    # exit status used by the command line front end
    exit_status = 1

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        for key, val in self.details.items():
            out[key] = val
        return out


class NoRootConverged(MinsurfError):
    code = "NoRootConverged"


class AmbiguousSheet(MinsurfError):
    code = "AmbiguousSheet"


class SheetJumpDetected(MinsurfError):
    code = "SheetJumpDetected"


class SingularPoint(MinsurfError):
    code = "SingularPoint"


class QuadratureNoConverge(MinsurfError):
    code = "QuadratureNoConverge"


class ZeroFluxAxisUndefined(MinsurfError):
    code = "ZeroFluxAxisUndefined"


class DegenerateAlpha(MinsurfError):
    code = "DegenerateAlpha"


class MonotonicityViolated(MinsurfError):
    code = "MonotonicityViolated"


class UnknownEntry(MinsurfError):
    code = "UnknownEntry"


class ParamOutOfRange(MinsurfError):
    code = "ParamOutOfRange"


class InsufficientEndSamples(MinsurfError):
    code = "InsufficientEndSamples"


class UnsupportedTopology(MinsurfError):
    code = "UnsupportedTopology"


class PathClearanceError(MinsurfError):
    """A chart path comes too close to a branch value or puncture."""
    code = "PathClearance"


class NonzeroPeriod(MinsurfError):
    code = "NonzeroPeriod"
    exit_status = 2


class NearThresholdAmbiguous(MinsurfError):
    code = "NearThresholdAmbiguous"
    exit_status = 2


class MeshError(MinsurfError):
    code = "MeshError"


class IoError(MinsurfError):
    code = "IoError"
