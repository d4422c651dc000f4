"""Exception hierarchy.

Every failure mode carries a stable string ``code`` so that the CLI report can
record it without parsing messages.
"""

from __future__ import annotations


class HardyLabError(Exception):
    """Base class for all library errors."""

    code = "ERROR"

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.context = context

    def as_record(self) -> dict:
        return {"code": self.code, "message": str(self), **_jsonable(self.context)}


def _jsonable(ctx: dict) -> dict:
    out = {}
    for k, v in ctx.items():
        try:
            out[k] = float(v)
        except (TypeError, ValueError):
            out[k] = str(v)
    return out


class MuBelowCritical(HardyLabError, ValueError):
    code = "MU_BELOW_CRITICAL"


class BadIndex(HardyLabError, ValueError):
    code = "BAD_INDEX"


class CriticalRange(HardyLabError, ValueError):
    code = "CRITICAL_RANGE"


class QuadratureUnconverged(HardyLabError, RuntimeError):
    code = "QUADRATURE_UNCONVERGED"


class UnsupportedDim(HardyLabError, ValueError):
    code = "UNSUPPORTED_DIM"


class MeshTooCoarse(HardyLabError, ValueError):
    code = "MESH_TOO_COARSE"


class LayerUnresolved(HardyLabError, ValueError):
    code = "LAYER_UNRESOLVED"


class SingularNode(HardyLabError, ValueError):
    code = "SINGULAR_NODE"


class NotSPD(HardyLabError, RuntimeError):
    code = "NOT_SPD"


class NoConvergence(HardyLabError, RuntimeError):
    code = "NO_CONVERGENCE"


class NegativeMode(HardyLabError, RuntimeError):
    code = "NEGATIVE_MODE"


class WindowTooNarrow(HardyLabError, ValueError):
    code = "WINDOW_TOO_NARROW"


class OffsetOutsideMesh(HardyLabError, ValueError):
    code = "OFFSET_OUTSIDE_MESH"


class DataUnresolved(HardyLabError, ValueError):
    code = "DATA_UNRESOLVED"


class NonmonotoneSequence(HardyLabError, RuntimeError):
    code = "NONMONOTONE_SEQUENCE"


class MassBoundFailed(HardyLabError, RuntimeError):
    code = "MASS_BOUND_FAILED"


class NoDecay(HardyLabError, RuntimeError):
    code = "NO_DECAY"


class HypothesisViolated(HardyLabError, ValueError):
    code = "HYPOTHESIS_VIOLATED"


class TraceDivergent(HardyLabError, RuntimeError):
    code = "TRACE_DIVERGENT"


class ConfigInvalid(HardyLabError, ValueError):
    code = "CONFIG_INVALID"

    def __init__(self, message: str = "", fields: dict | None = None):
        super().__init__(message)
        self.fields = dict(fields or {})

    def as_record(self) -> dict:
        return {"code": self.code, "message": str(self), "fields": self.fields}
