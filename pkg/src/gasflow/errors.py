from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:  # pragma: no cover
    from .network import ValidationReport


class GasFlowError(Exception):
    """Base class for every error raised by gasflow."""


class MalformedInput(GasFlowError):
    """Instance text is not valid UTF-8 JSON."""


class SchemaViolation(GasFlowError):
    """Instance document does not match the schema (keys, ids, units, values)."""


class InconsistentBoundary(GasFlowError):
    """A junction carries both or neither of slack pressure and injection."""


class AssumptionViolation(GasFlowError):
    def __init__(self, message: str, report: "ValidationReport") -> None:
        super().__init__(message)
        self.report = report


class OverflowingCoefficient(GasFlowError):
    """CNGA coefficient is not representable as a finite float."""


class NonPositivePotential(GasFlowError):
    """Potential inversion requested for a value with no positive pre-image."""


class NoPipes(GasFlowError):
    """Nominal length is undefined for a network without pipes."""


class SingularJacobian(GasFlowError):
    def __init__(self, detail: str, *, rank: Optional[int] = None, size: Optional[int] = None) -> None:
        message = detail if rank is None else f"{detail} (rank {rank} of {size})"
        super().__init__(message)
        self.detail = detail
        self.rank = rank
        self.size = size


class NotATree(GasFlowError):
    """Active edge set is not a spanning tree."""


class MultipleSlacks(GasFlowError):
    """Tree substitution needs exactly one slack junction."""
