import sys
from typing import TextIO

from rtlforge.core.logging import get_logger
from rtlforge.domain.diagnostics import Diagnostic
from rtlforge.domain.errors import (
    ConstructionError,
    DiagnosticError,
    DomainError,
    ElaborationError,
    EmissionError,
    EvaluationError,
    InputError,
    SexpirError,
    SimulationError,
    TypeCheckError,
)

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

_ERROR_MAP: dict[type[DomainError], tuple[int, str]] = {
    InputError: (EXIT_INPUT, "Input could not be resolved"),
    SexpirError: (EXIT_DIAGNOSTICS, "Sexpir input rejected"),
    ConstructionError: (EXIT_DIAGNOSTICS, "Circuit construction failed"),
    TypeCheckError: (EXIT_DIAGNOSTICS, "Type check failed"),
    ElaborationError: (EXIT_DIAGNOSTICS, "Elaboration failed"),
    EvaluationError: (EXIT_DIAGNOSTICS, "Constant evaluation failed"),
    SimulationError: (EXIT_DIAGNOSTICS, "Simulation failed"),
    EmissionError: (EXIT_DIAGNOSTICS, "Emission failed"),
}


def print_diagnostics(diagnostics: list[Diagnostic], structured: bool, stream: TextIO | None = None) -> None:
    stream = stream or sys.stderr
    for diagnostic in diagnostics:
        print(diagnostic.model_dump_json() if structured else diagnostic.format(), file=stream)


def handle_error(exc: DomainError, structured: bool = False, stream: TextIO | None = None) -> int:
    """Print a failure the way the command-line tool reports it and return its exit status."""
    stream = stream or sys.stderr
    for error_type, (status, summary) in _ERROR_MAP.items():
        if isinstance(exc, error_type):
            if isinstance(exc, DiagnosticError):
                print_diagnostics(exc.diagnostics, structured, stream)
            if not structured:
                print(f"{summary}.", file=stream)
            return status
    logger.error("unexpected failure: %s", exc)
    print(f"Internal error: {exc}", file=stream)
    return EXIT_INTERNAL
