"""Exception types raised across the simulator."""


class OptomechError(Exception):
    """Base class for every error raised by this package."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class SpaceMismatch(OptomechError, ValueError):
    code = "SpaceMismatch"


class NonFinite(OptomechError, ValueError):
    code = "NonFinite"


class TruncationTooSmall(OptomechError, ValueError):
    code = "TruncationTooSmall"


class IndexOutOfRange(OptomechError, IndexError):
    code = "IndexOutOfRange"


class UnknownSlot(OptomechError, KeyError):
    code = "UnknownSlot"

    def __str__(self):
        return Exception.__str__(self)


class InvalidState(OptomechError, ValueError):
    code = "InvalidState"


class UnstableRegime(OptomechError, ValueError):
    code = "UnstableRegime"


class UnsupportedPhase(OptomechError, ValueError):
    code = "UnsupportedPhase"


class DimensionTooLarge(OptomechError, ValueError):
    code = "DimensionTooLarge"


class SingularSystem(OptomechError, ArithmeticError):
    code = "SingularSystem"


class StepRejected(OptomechError, ArithmeticError):
    code = "StepRejected"


class TruncationLeak(OptomechError, RuntimeError):
    code = "TruncationLeak"


class VacuumDivergence(OptomechError, ArithmeticError):
    code = "VacuumDivergence"


class PadTooSmall(OptomechError, ValueError):
    code = "PadTooSmall"


class ConfigParse(OptomechError, ValueError):
    code = "ConfigParse"

    def __init__(self, message: str, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line

    def to_dict(self):
        d = super().to_dict()
        d["key"] = self.key
        d["line"] = self.line
        return d


class UnknownScenario(OptomechError, ValueError):
    code = "UnknownScenario"


class IOFailure(OptomechError, OSError):
    code = "IOFailure"
