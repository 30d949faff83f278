"""Exception hierarchy for gptent."""

from typing import Any, List, Optional


class GptentError(Exception):
    """Base class for every error raised by the toolkit."""


class ModelError(GptentError):
    """Malformed test space, polytope, composite or bundle reference."""


class InputError(GptentError):
    """Unreadable or unparsable input file."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class InvalidDistributionError(GptentError):
    """Negative weight or weights that do not sum to one."""


class StateValidationError(GptentError):
    """A candidate state violates bounds or normalization."""

    def __init__(self, message: str, violations: List[Any]):
        self.violations = list(violations)
        details = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{message}: {details}" if details else message)


class DimensionMismatchError(GptentError):
    """Point dimension differs from the polytope's ambient dimension."""


class OutsidePolytopeError(GptentError):
    """Point lies outside the polytope; carries a separating functional."""

    def __init__(self, message: str, certificate: Any):
        self.certificate = certificate
        super().__init__(message)


class SignalingError(GptentError):
    """Joint state violates the non-signaling condition."""

    def __init__(self, message: str, violation: Any):
        self.violation = violation
        super().__init__(f"{message}: {violation}")


class OverlappingSubsetsError(GptentError):
    """Component subsets passed to an information quantity overlap."""


class ProtocolError(GptentError):
    """Protocol strategy is not total or a message exceeds its length."""


class FunctionalError(GptentError):
    """Undefined Schur-concave functional or parameter."""


class ConstructionError(GptentError):
    """Concavity-violation construction failed; carries its trace."""

    def __init__(self, message: str, trace: Any):
        self.trace = trace
        super().__init__(message)
