from collections.abc import Iterable

from .diagnostics import Diagnostic


class DomainError(Exception):
    def __init__(self, message: str = ""):
        self.message = message
        super().__init__(message)


class DiagnosticError(DomainError):
    """A failure described by one or more diagnostics."""

    def __init__(self, diagnostics: Diagnostic | Iterable[Diagnostic], message: str = ""):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics: list[Diagnostic] = list(diagnostics)
        if not message:
            message = "; ".join(d.format() for d in self.diagnostics[:3])
            if len(self.diagnostics) > 3:
                message += f" (+{len(self.diagnostics) - 3} more)"
        super().__init__(message)

    @property
    def diagnostic(self) -> Diagnostic:
        return self.diagnostics[0]


class ConstructionError(DiagnosticError):
    pass


class TypeCheckError(DiagnosticError):
    pass


class ElaborationError(DiagnosticError):
    pass


class SexpirError(DiagnosticError):
    pass


class EvaluationError(DiagnosticError):
    pass


class SimulationError(DiagnosticError):
    pass


class EmissionError(DiagnosticError):
    pass


class InputError(DiagnosticError):
    pass


class UnresolvedAliasError(DomainError):
    """Raised when a type still holds an alias where a resolved type is required."""
