"""Input resolution and the compile/simulate flows shared by the command-line tool and tests."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path

from pydantic import ValidationError

from rtlforge.core.logging import get_logger
from rtlforge.domain.diagnostics import Diagnostic, RuleId, error
from rtlforge.domain.errors import InputError, SimulationError
from rtlforge.domain.ir import CircuitDef, Direction
from rtlforge.infrastructure.files import read_text
from rtlforge.infrastructure.sexpir.lowering import component_circuits, lower_to_ir
from rtlforge.infrastructure.sexpir.reader import parse
from rtlforge.infrastructure.stimulus import Command, Expect, Poke, Step

from .builtins import is_builtin, load_builtin
from .elaborate import ElaboratedCircuit, PortPartition, apply_port_partition, elaborate, infer_ports
from .simulator import CycleSimulator

logger = get_logger(__name__)


class SexpirLoader:
    """Loads a Sexpir file and, recursively, the ``<circuit>.sexp`` files its components name."""

    def __init__(self, directory: Path):
        self._directory = directory
        self._loaded: dict[str, CircuitDef] = {}
        self._loading: list[str] = []
        self.partitions: dict[str, PortPartition] = {}

    def load(self, path: Path, overrides: Mapping[str, Direction] | None = None) -> CircuitDef:
        root = parse(read_text(path))
        components: dict[str, CircuitDef] = {}
        for name in component_circuits(root):
            components[name] = self._component(name)
        circuit = lower_to_ir(root, components)
        return self._with_ports(circuit, overrides)

    def _component(self, name: str) -> CircuitDef:
        if name in self._loaded:
            return self._loaded[name]
        if name in self._loading:
            chain = " -> ".join((*self._loading, name))
            raise InputError(error(RuleId.UNRESOLVED_COMPONENT, f"circuit {name} instantiates itself: {chain}"))
        path = self._directory / f"{name}.sexp"
        if not path.is_file():
            raise InputError(error(RuleId.UNRESOLVED_COMPONENT, f"component circuit {name} needs {path}"))
        self._loading.append(name)
        try:
            circuit = self.load(path)
        finally:
            self._loading.pop()
        if circuit.name != name:
            raise InputError(error(RuleId.UNRESOLVED_COMPONENT, f"{path} defines {circuit.name}, not {name}"))
        self._loaded[name] = circuit
        return circuit

    def _with_ports(self, circuit: CircuitDef, overrides: Mapping[str, Direction] | None) -> CircuitDef:
        if circuit.ports:
            return circuit
        partition = infer_ports(circuit, overrides)
        self.partitions[circuit.name] = partition
        return apply_port_partition(circuit, partition)


def load_circuit(spec: str, overrides: Mapping[str, Direction] | None = None) -> CircuitDef:
    """A circuit from ``builtin:<name>[:<param>]``, a ``.sexp`` file or a ``.json`` description file."""
    if is_builtin(spec):
        return load_builtin(spec)
    path = Path(spec)
    match path.suffix.lower():
        case ".sexp":
            return SexpirLoader(path.parent).load(path, overrides)
        case ".json":
            try:
                return CircuitDef.model_validate_json(read_text(path))
            except ValidationError as exc:
                raise InputError(error(RuleId.BAD_VALUE, f"{path} is not a circuit description: {exc.errors()[0]['msg']}")) from exc
    raise InputError(error(RuleId.UNSUPPORTED, f"cannot tell the format of {spec} (expected .sexp, .json or builtin:)"))


def compile_circuit(spec: str, overrides: Mapping[str, Direction] | None = None) -> ElaboratedCircuit:
    circuit = load_circuit(spec, overrides)
    logger.info("compiling %s from %s", circuit.name, spec)
    return elaborate(circuit)


def run_script(simulator: CycleSimulator, commands: Sequence[Command]) -> list[Diagnostic]:
    """Apply a stimulus script; every failed ``expect`` becomes one diagnostic and the script carries on."""
    failures: list[Diagnostic] = []
    circuit = simulator.elab.name
    for command in commands:
        try:
            match command:
                case Poke(name=name, value=value):
                    simulator.poke(name, value)
                case Step(cycles=cycles):
                    simulator.step(cycles)
                case Expect(name=name, value=value):
                    actual = simulator.peek_signed(name) if value < 0 else simulator.peek(name)
                    if actual != value:
                        failures.append(error(
                            RuleId.EXPECT_FAILED,
                            f"cycle {simulator.cycle}: expected {name} = {value}, got {actual}",
                            circuit=circuit, path="script", line=command.line,
                        ))
        except SimulationError as exc:
            raise SimulationError([d.model_copy(update={"line": command.line}) for d in exc.diagnostics]) from exc
    for failure in failures:
        logger.error(failure.format())
    return failures
