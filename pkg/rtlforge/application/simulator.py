"""Cycle-based two-phase evaluator over elaborated circuits.

The hierarchy is inlined: the port ``p`` of instance ``i`` becomes the signal
``i__p`` (nested instances chain the prefix). Values are nonnegative integers
masked to the signal width, composites packed with the first record field and
array element 0 in the low bits. Signed signals hold two's complement.
"""

from __future__ import annotations

import random
from collections.abc import Callable, Mapping
from typing import Any

import networkx as nx
from pydantic import BaseModel, ConfigDict

from rtlforge.core.logging import get_logger
from rtlforge.core.settings import SimulationSettings, get_settings
from rtlforge.domain.diagnostics import RuleId, error
from rtlforge.domain.errors import SimulationError
from rtlforge.domain.ir import (
    Aggregate,
    Assign,
    Binary,
    BinaryOp,
    Case,
    Combinatorial,
    FieldAccess,
    If,
    Index,
    PortRef,
    Ref,
    Sequential,
    StateLit,
    Stmt,
    Unary,
    UnaryOp,
    child_statements,
    read_signals,
    target_reads,
    target_root,
)
from rtlforge.domain.typesys import ConversionKind, PlanNode, const_value, width_of
from rtlforge.domain.types import Array, Record, Signed, StateEnum, TypeDesc

from .elaborate import ElaboratedCircuit

logger = get_logger(__name__)

Values = dict[str, int]
Reader = Callable[[Mapping[str, int]], int]
Action = Callable[[Mapping[str, int], Values], None]


def _mask(width: int) -> int:
    return (1 << width) - 1


def _signed(value: int, width: int) -> int:
    return value - (1 << width) if value >> (width - 1) & 1 else value


def _field_offset(record: Record, name: str) -> tuple[int, int]:
    offset = 0
    for field_name, field_type in record.fields:
        width = width_of(field_type)
        if field_name == name:
            return offset, width
        offset += width
    raise KeyError(name)


class SimState(BaseModel):
    """Snapshot of a simulation after settling."""

    model_config = ConfigDict(frozen=True)

    cycle: int
    values: dict[str, int]
    states: dict[str, str] = {}


class _Unit:
    __slots__ = ("name", "reads", "writes", "action")

    def __init__(self, name: str, reads: set[str], writes: set[str], action: Action):
        self.name = name
        self.reads = reads
        self.writes = writes
        self.action = action


class _Compiler:
    """Turns plans of one (possibly nested) circuit into closures over flat signal names."""

    def __init__(self, elab: ElaboratedCircuit, prefix: str):
        self.elab = elab
        self.prefix = prefix

    def key(self, expr: Ref | PortRef) -> str:
        if isinstance(expr, PortRef):
            return f"{self.prefix}{expr.instance}__{expr.port}"
        return f"{self.prefix}{expr.name}"

    # expressions

    def expr(self, node: PlanNode) -> Reader:
        reader = self._bare(node)
        current: TypeDesc = node.natural
        width = node.width
        for conversion in node.conversions:
            target = conversion.width
            if conversion.kind is ConversionKind.RESIZE and isinstance(current, Signed) and target > width:
                reader = _sign_extend(reader, width, target)
            elif target < width:
                reader = _masked(reader, target)
            current, width = conversion.apply(current), target
        return reader

    def _bare(self, node: PlanNode) -> Reader:
        e = node.expr
        value = const_value(e)
        if value is not None:
            constant = value & _mask(node.width)
            return lambda v: constant
        match e:
            case Ref() | PortRef():
                key = self.key(e)
                return lambda v: v[key]
            case StateLit(name=name):
                index = node.natural.states.index(name)
                return lambda v: index
            case Index():
                return self._index(node)
            case FieldAccess(name=name):
                base = self.expr(node.children[0])
                offset, width = _field_offset(node.children[0].natural, name)
                m = _mask(width)
                return lambda v: (base(v) >> offset) & m
            case Aggregate():
                return self._aggregate(node)
            case Unary(op=UnaryOp.NOT):
                operand = self.expr(node.children[0])
                m = _mask(node.width)
                return lambda v: ~operand(v) & m
            case Unary(op=UnaryOp.NEG):
                operand = self.expr(node.children[0])
                m = _mask(node.width)
                return lambda v: -operand(v) & m
            case Binary(op=op):
                return self._binary(node, op)
        raise SimulationError(error(RuleId.UNSUPPORTED, f"cannot simulate {type(e).__name__}"))

    def _index(self, node: PlanNode) -> Reader:
        base_node, index_node = node.children
        base = self.expr(base_node)
        index = self.expr(index_node)
        bt = base_node.natural
        if isinstance(bt, Array):
            ew, length = width_of(bt.element), bt.length
            m = _mask(ew)
            return lambda v: (base(v) >> (index(v) * ew)) & m if index(v) < length else 0
        return lambda v: (base(v) >> index(v)) & 1

    def _aggregate(self, node: PlanNode) -> Reader:
        if isinstance(node.natural, Array):
            element = self.expr(node.children[0])
            ew, length = width_of(node.natural.element), node.natural.length
            return lambda v: sum(element(v) << (i * ew) for i in range(length))
        parts = []
        for (name, _), child in zip(node.expr.items, node.children):
            offset, width = _field_offset(node.natural, name)
            parts.append((self.expr(child), offset, _mask(width)))
        return lambda v: sum((read(v) & m) << offset for read, offset, m in parts)

    def _binary(self, node: PlanNode, op: BinaryOp) -> Reader:
        lhs_node, rhs_node = node.children
        lhs, rhs = self.expr(lhs_node), self.expr(rhs_node)
        m = _mask(node.width)
        match op:
            case BinaryOp.ADD:
                return lambda v: (lhs(v) + rhs(v)) & m
            case BinaryOp.SUB:
                return lambda v: (lhs(v) - rhs(v)) & m
            case BinaryOp.AND:
                return lambda v: lhs(v) & rhs(v)
            case BinaryOp.OR:
                return lambda v: lhs(v) | rhs(v)
            case BinaryOp.XOR:
                return lambda v: lhs(v) ^ rhs(v)
        lhs, rhs = _numeric(lhs, lhs_node), _numeric(rhs, rhs_node)
        compare: Callable[[int, int], bool] = {
            BinaryOp.EQ: int.__eq__,
            BinaryOp.NEQ: int.__ne__,
            BinaryOp.LT: int.__lt__,
            BinaryOp.GT: int.__gt__,
            BinaryOp.LE: int.__le__,
            BinaryOp.GE: int.__ge__,
        }[op]
        return lambda v: int(compare(lhs(v), rhs(v)))

    # statements

    def target(self, node: PlanNode) -> tuple[str, Callable[[Mapping[str, int]], tuple[int, int]]]:
        """Root signal of an assign target and a function giving the (offset, width) slice it writes."""
        chain: list[PlanNode] = []
        while isinstance(node.expr, (Index, FieldAccess)):
            chain.append(node)
            node = node.children[0]
        key = self.key(node.expr)
        full = node.width
        steps: list[Callable[[Mapping[str, int]], int]] = []
        for link in reversed(chain):
            base_type = link.children[0].natural
            if isinstance(link.expr, FieldAccess):
                offset, _ = _field_offset(base_type, link.expr.name)
                steps.append(lambda v, offset=offset: offset)
            else:
                stride = width_of(base_type.element) if isinstance(base_type, Array) else 1
                index = self.expr(link.children[1])
                steps.append(lambda v, index=index, stride=stride: index(v) * stride)
        width = chain[0].width if chain else full

        def locate(v: Mapping[str, int]) -> tuple[int, int]:
            return sum(step(v) for step in steps), width

        return key, locate

    def stmt(self, path: str, stmt: Stmt) -> Action:
        match stmt:
            case Assign():
                return self._assign(path)
            case If():
                cond = self.expr(self.elab.plan(f"{path}:cond").root)
                then = self.body([(f"{path}/then/{j}", s) for j, s in enumerate(stmt.then_body)])
                other = self.body([(f"{path}/else/{j}", s) for j, s in enumerate(stmt.else_body)])

                def run_if(v: Mapping[str, int], out: Values) -> None:
                    (then if cond(v) else other)(v, out)

                return run_if
            case Case():
                return self._case(path, stmt)
            case Sequential() | Combinatorial():
                return self.body(list(child_statements(stmt, path)))
        raise SimulationError(error(RuleId.UNSUPPORTED, f"cannot simulate {type(stmt).__name__} at {path}"))

    def body(self, items: list[tuple[str, Stmt]]) -> Action:
        actions = [self.stmt(p, s) for p, s in items]

        def run_body(v: Mapping[str, int], out: Values) -> None:
            for action in actions:
                action(v, out)

        return run_body

    def _assign(self, path: str) -> Action:
        rhs = self.expr(self.elab.plan(path).root)
        key, locate = self.target(self.elab.plan(f"{path}:lhs").root)

        def run_assign(v: Mapping[str, int], out: Values) -> None:
            offset, width = locate(v)
            m = _mask(width)
            old = out.get(key, v[key])
            out[key] = (old & ~(m << offset)) | ((rhs(v) & m) << offset)

        return run_assign

    def _case(self, path: str, stmt: Case) -> Action:
        selector_node = self.elab.plan(f"{path}:sel").root
        selector = self.expr(selector_node)
        arms: dict[int, Action] = {}
        for k, arm in enumerate(stmt.arms):
            choice = selector_node.natural.states.index(arm.value) if isinstance(arm.value, str) else arm.value
            items = [(f"{path}/when{k}/{j}", s) for j, s in enumerate(arm.body)]
            arms.setdefault(choice, self.body(items))
        default = self.body([(f"{path}/default/{j}", s) for j, s in enumerate(stmt.default)])

        def run_case(v: Mapping[str, int], out: Values) -> None:
            arms.get(selector(v), default)(v, out)

        return run_case


def _sign_extend(reader: Reader, width: int, target: int) -> Reader:
    m = _mask(target)
    return lambda v: _signed(reader(v), width) & m


def _masked(reader: Reader, width: int) -> Reader:
    m = _mask(width)
    return lambda v: reader(v) & m


def _numeric(reader: Reader, node: PlanNode) -> Reader:
    """Comparison operands: signed results read back as negative Python ints."""
    result = node.result
    if isinstance(result, Signed):
        width = result.width
        return lambda v: _signed(reader(v), width)
    return reader


class CycleSimulator:
    """Two-phase simulation: registers compute next values from current ones, then commit together."""

    def __init__(
        self,
        elab: ElaboratedCircuit,
        settings: SimulationSettings | None = None,
        seed: int | None = None,
    ):
        self.elab = elab
        self.settings = settings or get_settings().simulation
        seed = self.settings.shuffle_seed if seed is None else seed
        self._rng = random.Random(seed) if seed is not None else None
        self._widths: dict[str, int] = {}
        self._types: dict[str, TypeDesc] = {}
        self._state_regs: dict[str, StateEnum] = {}
        self._comb: list[_Unit] = []
        self._seq: list[_Unit] = []
        self._flatten(elab, "")
        self._inputs = {p.name for p in elab.source.inputs}
        self.values: Values = {name: 0 for name in self._widths}
        self.cycle = 0
        self._order = self._schedule()
        self._dirty = True
        logger.info(
            "simulating %s: %d signals, %d combinational units, %d sequential units",
            elab.name, len(self._widths), len(self._comb), len(self._seq),
        )

    # construction

    def _flatten(self, elab: ElaboratedCircuit, prefix: str) -> None:
        for name, t in elab.symbols.signals.items():
            if "." in name:
                continue
            self._widths[prefix + name] = width_of(t)
            self._types[prefix + name] = t
            if isinstance(t, StateEnum):
                self._state_regs[prefix + name] = t
        for inst in elab.source.instances:
            self._flatten(elab.child(inst.child.name), f"{prefix}{inst.name}__")

        compiler = _Compiler(elab, prefix)
        for i, stmt in enumerate(elab.statements):
            path = str(i)
            reads, writes = self._footprint(stmt, compiler, path)
            unit = _Unit(f"{elab.name}:{prefix}{path}", reads, writes, compiler.stmt(path, stmt))
            (self._seq if isinstance(stmt, Sequential) else self._comb).append(unit)

    @staticmethod
    def _footprint(stmt: Stmt, compiler: _Compiler, path: str) -> tuple[set[str], set[str]]:
        reads: set[str] = set()
        writes: set[str] = set()
        stack = [(path, stmt)]
        while stack:
            p, s = stack.pop()
            match s:
                case Assign(lhs=lhs, rhs=rhs):
                    reads.update(read_signals(rhs))
                    reads.update(target_reads(lhs))
                    writes.add(compiler.key(target_root(lhs)))
                case If(cond=cond):
                    reads.update(read_signals(cond))
                case Case(selector=selector):
                    reads.update(read_signals(selector))
            stack.extend(child_statements(s, p))
        mangled = {compiler.key(PortRef(*r.split(".")) if "." in r else Ref(r)) for r in reads}
        return mangled, writes

    def _schedule(self) -> list[list[_Unit]] | None:
        """Topological generations of combinational units; None when they only settle by iteration."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self._comb)))
        writers: dict[str, list[int]] = {}
        for i, unit in enumerate(self._comb):
            for key in unit.writes:
                writers.setdefault(key, []).append(i)
        for j, unit in enumerate(self._comb):
            for key in unit.reads:
                graph.add_edges_from((i, j) for i in writers.get(key, ()) if i != j)
        if not nx.is_directed_acyclic_graph(graph):
            logger.warning("%s: combinational units form a loop, settling by iteration", self.elab.name)
            return None
        return [[self._comb[i] for i in sorted(generation)] for generation in nx.topological_generations(graph)]

    def _shuffled(self, units: list[_Unit]) -> list[_Unit]:
        if self._rng is None:
            return units
        units = list(units)
        self._rng.shuffle(units)
        return units

    # evaluation

    def _run(self, unit: _Unit) -> bool:
        out: Values = {}
        unit.action(self.values, out)
        changed = False
        for key, value in out.items():
            value &= _mask(self._widths[key])
            if self.values[key] != value:
                self.values[key] = value
                changed = True
        return changed

    def _run_comb(self, unit: _Unit) -> None:
        """Run a unit until its own writes stop changing what it reads."""
        if not (self._run(unit) and unit.reads & unit.writes):
            return
        for _ in range(self.settings.max_settle_passes):
            if not self._run(unit):
                return
        raise SimulationError(error(
            RuleId.UNSUPPORTED,
            f"process {unit.name} did not settle in {self.settings.max_settle_passes} passes",
            circuit=self.elab.name,
        ))

    def settle(self) -> None:
        if not self._dirty:
            return
        if self._order is not None:
            for generation in self._order:
                for unit in self._shuffled(generation):
                    self._run_comb(unit)
        else:
            for _ in range(self.settings.max_settle_passes):
                if not any([self._run(unit) for unit in self._shuffled(self._comb)]):
                    break
            else:
                raise SimulationError(error(
                    RuleId.UNSUPPORTED,
                    f"combinational logic did not settle in {self.settings.max_settle_passes} passes",
                    circuit=self.elab.name,
                ))
        self._dirty = False

    def _resolve(self, name: str) -> str:
        key = name.replace(".", "__")
        if key not in self._widths:
            raise SimulationError(error(RuleId.UNKNOWN_SIGNAL, f"no signal named {name}", circuit=self.elab.name))
        return key

    def poke(self, name: str, value: int) -> None:
        key = self._resolve(name)
        if key not in self._inputs:
            raise SimulationError(error(RuleId.NOT_AN_INPUT, f"{name} is not an input", circuit=self.elab.name))
        width = self._widths[key]
        low = -(1 << (width - 1)) if isinstance(self._types[key], Signed) else 0
        if not low <= value < (1 << width):
            raise SimulationError(error(
                RuleId.BAD_VALUE, f"{value} does not fit the {width}-bit input {name}", circuit=self.elab.name,
            ))
        self.values[key] = value & _mask(width)
        self._dirty = True

    def peek(self, name: str) -> int:
        key = self._resolve(name)
        self.settle()
        return self.values[key]

    def peek_signed(self, name: str) -> int:
        key = self._resolve(name)
        return _signed(self.peek(name), self._widths[key])

    def peek_state(self, name: str) -> str:
        """Current state of an FSM, by label or by state register name."""
        key = self._resolve(name if name.endswith("_state") else f"{name}_state")
        enum = self._state_regs.get(key)
        if enum is None:
            raise SimulationError(error(RuleId.UNKNOWN_SIGNAL, f"{name} is not an FSM", circuit=self.elab.name))
        self.settle()
        return enum.states[self.values[key]]

    def step(self, cycles: int = 1) -> SimState:
        for _ in range(cycles):
            self.settle()
            staged: Values = {}
            for unit in self._shuffled(self._seq):
                out: Values = {}
                unit.action(self.values, out)
                for key, value in out.items():
                    # only the bits this unit changed, so disjoint slices from two blocks merge
                    old = self.values[key]
                    changed = (value ^ old) & _mask(self._widths[key])
                    staged[key] = (staged.get(key, old) & ~changed) | (value & changed)
            for key, value in staged.items():
                self.values[key] = value & _mask(self._widths[key])
            self.cycle += 1
            self._dirty = True
        return self.snapshot()

    def snapshot(self) -> SimState:
        self.settle()
        states = {key: enum.states[self.values[key]] for key, enum in self._state_regs.items()}
        return SimState(cycle=self.cycle, values=dict(self.values), states=states)

    def signals(self) -> list[str]:
        return sorted(self._widths)

    def width(self, name: str) -> int:
        return self._widths[self._resolve(name)]


def init(elab: ElaboratedCircuit, **options: Any) -> CycleSimulator:
    """A simulator at reset: registers zero, state registers in their first state, nets settled."""
    simulator = CycleSimulator(elab, **options)
    simulator.settle()
    return simulator
