from __future__ import annotations

import sys
from pathlib import Path
from typing import TextIO

from rtlforge.application.elaborate import ElaboratedCircuit
from rtlforge.application.pipeline import compile_circuit, run_script
from rtlforge.application.simulator import init
from rtlforge.core.logging import get_logger
from rtlforge.core.settings import Settings, get_settings
from rtlforge.domain.errors import DomainError
from rtlforge.infrastructure.backends.dot import emit_dot
from rtlforge.infrastructure.backends.pretty import pretty
from rtlforge.infrastructure.backends.vhdl import emit_vhdl
from rtlforge.infrastructure.files import read_port_overrides, read_text, write_atomic
from rtlforge.infrastructure.sexpir.lowering import emit_sexpir_files
from rtlforge.infrastructure.stimulus import parse_script

from .error_handlers import EXIT_DIAGNOSTICS, EXIT_OK, handle_error, print_diagnostics
from .schemas import Command, EmitKind, Invocation

logger = get_logger(__name__)


def effective_settings(invocation: Invocation) -> Settings:
    """Settings with the invocation's overrides applied to a copy; the cached settings stay untouched."""
    settings = get_settings()
    vhdl = {
        key: value
        for key, value in (
            ("clock_name", invocation.clock),
            ("reset_n_name", invocation.reset_n),
            ("sreset_name", invocation.sreset),
        )
        if value is not None
    }
    update: dict[str, object] = {}
    if vhdl:
        update["vhdl"] = settings.vhdl.model_copy(update=vhdl)
    if invocation.structured:
        update["output"] = settings.output.model_copy(update={"structured_diagnostics": True})
    return settings.model_copy(update=update) if update else settings


def _artifacts(elab: ElaboratedCircuit, kind: EmitKind, settings: Settings) -> dict[str, str]:
    match kind:
        case EmitKind.VHDL:
            return {unit.file_name: unit.text for unit in emit_vhdl(elab, settings.vhdl)}
        case EmitKind.DOT:
            return {f"{elab.name}.dot": emit_dot(elab)}
        case EmitKind.PRETTY:
            return {f"{elab.name}.txt": pretty(elab)}
        case EmitKind.SEXP:
            return emit_sexpir_files(elab)
    return {f"{elab.name}.json": elab.source.model_dump_json(indent=2) + "\n"}


def emit(
    elab: ElaboratedCircuit, invocation: Invocation, settings: Settings, stdout: TextIO,
) -> list[Path]:
    """Write every requested artifact; without ``-o`` the text views print and VHDL goes to the default directory."""
    written: list[Path] = []
    for kind in invocation.emits:
        artifacts = _artifacts(elab, kind, settings)
        directory = invocation.output_dir
        if directory is None and kind is EmitKind.VHDL:
            directory = settings.output.output_dir
        if directory is None:
            for text in artifacts.values():
                stdout.write(text)
            continue
        written.extend(write_atomic(directory / name, text) for name, text in artifacts.items())
    return written


def simulate(elab: ElaboratedCircuit, invocation: Invocation, settings: Settings, stdout: TextIO, stderr: TextIO) -> int:
    commands = parse_script(read_text(invocation.script))
    simulator = init(elab, settings=settings.simulation)
    failures = run_script(simulator, commands)
    if failures:
        print_diagnostics(failures, settings.output.structured_diagnostics, stderr)
        return EXIT_DIAGNOSTICS
    print(f"{elab.name}: {simulator.cycle} cycles, {len(commands)} commands, all expectations met", file=stdout)
    return EXIT_OK


def run(invocation: Invocation, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    """Execute one invocation; the result is the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    settings = effective_settings(invocation)
    structured = settings.output.structured_diagnostics
    try:
        overrides = read_port_overrides(invocation.ports) if invocation.ports else None
        elab = compile_circuit(invocation.input, overrides)
        print_diagnostics(list(elab.diagnostics), structured, stderr)
        if invocation.command is Command.SIM:
            return simulate(elab, invocation, settings, stdout, stderr)
        written = emit(elab, invocation, settings, stdout)
    except DomainError as exc:
        return handle_error(exc, structured, stderr)
    if invocation.command is Command.CHECK and not structured:
        print(f"{elab.name}: ok ({len(elab.diagnostics)} warnings)", file=stdout)
    logger.info("%s %s: %d files written", invocation.command, invocation.input, len(written))
    return EXIT_OK
