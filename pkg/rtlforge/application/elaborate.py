"""Elaboration: from a constructed circuit to a resolved, typed, lowered one.

Every pass collects diagnostics instead of stopping at the first problem;
``elaborate`` raises a single ``ElaborationError`` carrying all of them.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from typing import Any

import networkx as nx
from pydantic import BaseModel, ConfigDict

from rtlforge.core.logging import get_logger
from rtlforge.domain import policies
from rtlforge.domain.diagnostics import Diagnostic, RuleId, Severity, error, has_errors, warning
from rtlforge.domain.errors import ElaborationError, EvaluationError, TypeCheckError
from rtlforge.domain.ir import (
    BLOCK_TYPES,
    Aggregate,
    Assign,
    AssignKind,
    Binary,
    Case,
    CaseArm,
    CircuitDef,
    Combinatorial,
    Direction,
    Expr,
    FieldAccess,
    Fsm,
    If,
    Index,
    Lit,
    NextState,
    PortDecl,
    Ref,
    Sequential,
    StateLit,
    Stmt,
    Unary,
    WireDecl,
    element_key,
    is_constant,
    read_signals,
    signal_key,
    target_reads,
    target_root,
    walk,
)
from rtlforge.domain.typesys import (
    CoercionPlan,
    SymbolTable,
    build_symbol_table,
    check_assign,
    check_choice,
    check_condition,
    const_value,
    fold_constants,
    int_expr,
    plan_expr,
)
from rtlforge.domain.types import SCALAR_TYPES, StateEnum

logger = get_logger(__name__)


# --- dependency graph ------------------------------------------------------


class DepEdge(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: str
    target: str
    registered: bool


class DependencyGraph(BaseModel):
    """Signals as nodes; ``s -> t`` when ``s`` feeds an assignment to ``t``.

    Edges carry ``combinational`` and ``registered`` flags; one pair of signals
    can be linked both ways (read by a continuous assign and by a register).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    graph: nx.DiGraph

    @property
    def nodes(self) -> list[str]:
        return sorted(self.graph.nodes)

    def edges(self) -> list[DepEdge]:
        result = []
        for s, t, data in self.graph.edges(data=True):
            if data.get("combinational"):
                result.append(DepEdge(source=s, target=t, registered=False))
            if data.get("registered"):
                result.append(DepEdge(source=s, target=t, registered=True))
        return sorted(result, key=lambda e: (e.source, e.target, e.registered))

    def combinational(self) -> nx.DiGraph:
        comb = nx.DiGraph()
        comb.add_nodes_from(self.graph.nodes)
        comb.add_edges_from((s, t) for s, t, d in self.graph.edges(data=True) if d.get("combinational"))
        return comb

    def cycles(self) -> list[list[str]]:
        """One representative cycle per strongly connected combinational component."""
        comb = self.combinational()
        found = []
        for component in nx.strongly_connected_components(comb):
            nodes = sorted(component)
            if len(nodes) == 1 and not comb.has_edge(nodes[0], nodes[0]):
                continue
            sub = comb.subgraph(nodes)
            cycle = nx.find_cycle(sub, source=nodes[0])
            found.append([s for s, _ in cycle])
        return sorted(found)

    def readers(self, signal: str) -> set[str]:
        return set(self.graph.successors(signal)) if signal in self.graph else set()

    def combinational_reach(self, sources: Iterable[str], sinks: Iterable[str]) -> list[tuple[str, str]]:
        comb = self.combinational()
        sinks = set(sinks)
        pairs = []
        for source in sources:
            if source in comb:
                pairs.extend((source, t) for t in sorted(nx.descendants(comb, source) & sinks))
        return pairs


def _add_edge(graph: nx.DiGraph, source: str, target: str, registered: bool) -> None:
    flag = "registered" if registered else "combinational"
    if graph.has_edge(source, target):
        graph[source][target][flag] = True
    else:
        graph.add_edge(source, target, **{flag: True})


def _block_assigns(body: Sequence[Stmt]) -> Iterable[tuple[Assign, list[str]]]:
    """Assigns of a block with the signals of every condition or selector governing them."""
    stack: list[tuple[Stmt, list[str]]] = [(s, []) for s in reversed(body)]
    while stack:
        stmt, governing = stack.pop()
        match stmt:
            case Assign():
                yield stmt, governing
            case If(cond=cond):
                inner = governing + read_signals(cond)
                stack.extend((s, inner) for s in reversed((*stmt.then_body, *stmt.else_body)))
            case Case(selector=selector):
                inner = governing + read_signals(selector)
                arms = [s for arm in stmt.arms for s in arm.body] + list(stmt.default)
                stack.extend((s, inner) for s in reversed(arms))


def build_dep_graph(
    circuit: CircuitDef,
    statements: Sequence[Stmt] | None = None,
    children: Mapping[str, ElaboratedCircuit] | None = None,
    extra_signals: Iterable[str] = (),
) -> DependencyGraph:
    statements = circuit.statements if statements is None else statements
    graph = nx.DiGraph()
    graph.add_nodes_from(d.name for d in (*circuit.ports, *circuit.wires))
    graph.add_nodes_from(extra_signals)
    for inst in circuit.instances:
        graph.add_nodes_from(f"{inst.name}.{p.name}" for p in inst.child.ports)

    for stmt in statements:
        registered = isinstance(stmt, Sequential)
        if isinstance(stmt, Assign):
            assigns = [(stmt, [])]
        elif isinstance(stmt, (Sequential, Combinatorial)):
            assigns = list(_block_assigns(stmt.body))
        else:
            continue
        for assign, governing in assigns:
            root = target_root(assign.lhs)
            target = signal_key(root) if root is not None else None
            if target is None:
                continue
            graph.add_node(target)
            for source in (*read_signals(assign.rhs), *target_reads(assign.lhs), *governing):
                _add_edge(graph, source, target, registered)

    for inst in circuit.instances:
        child = (children or {}).get(inst.child.name)
        if child is None:
            continue
        ins = [p.name for p in inst.child.inputs]
        outs = [p.name for p in inst.child.outputs]
        for i, o in child.graph.combinational_reach(ins, outs):
            _add_edge(graph, f"{inst.name}.{i}", f"{inst.name}.{o}", registered=False)
    return DependencyGraph(graph=graph)


# --- FSM lowering ----------------------------------------------------------


def state_register(label: str) -> str:
    return f"{label}_state"


def state_type(label: str) -> str:
    return f"{label}_state_t"


def _split(body: Sequence[Stmt], register: str) -> tuple[tuple[Stmt, ...], tuple[Stmt, ...]]:
    """Separate synchronous statements from comb_assigns, keeping the If/Case structure around each."""
    sync: list[Stmt] = []
    comb: list[Stmt] = []
    for stmt in body:
        match stmt:
            case NextState(target=target):
                sync.append(Assign(lhs=Ref(register), rhs=StateLit(target), kind=AssignKind.EMBEDDED))
            case Assign(kind=AssignKind.COMBINATORIAL):
                comb.append(stmt.model_copy(update={"kind": AssignKind.EMBEDDED}))
            case Assign():
                sync.append(stmt)
            case If():
                ts, tc = _split(stmt.then_body, register)
                es, ec = _split(stmt.else_body, register)
                if ts or es:
                    sync.append(If(cond=stmt.cond, then_body=ts, else_body=es))
                if tc or ec:
                    comb.append(If(cond=stmt.cond, then_body=tc, else_body=ec))
            case Case():
                split_arms = [(arm.value, *_split(arm.body, register)) for arm in stmt.arms]
                ds, dc = _split(stmt.default, register)
                if any(s for _, s, _ in split_arms) or ds:
                    arms = tuple(CaseArm(value=v, body=s) for v, s, _ in split_arms)
                    sync.append(Case(selector=stmt.selector, arms=arms, default=ds))
                if any(c for _, _, c in split_arms) or dc:
                    arms = tuple(CaseArm(value=v, body=c) for v, _, c in split_arms)
                    comb.append(Case(selector=stmt.selector, arms=arms, default=dc))
    return tuple(sync), tuple(comb)


def lower_fsm(fsm: Fsm, symbols: SymbolTable | None = None) -> tuple[WireDecl, Sequential, Combinatorial | None]:
    """Lower an FSM to a state register, one clocked process and, for comb_assigns, one combinational process.

    The clocked process runs the FSM defaults, then a case over the state
    register; the first state is the reset state.
    """
    register = state_register(fsm.label)
    enum = StateEnum(name=state_type(fsm.label), states=fsm.state_names)
    sync_arms, comb_arms = [], []
    for state in fsm.states:
        sync, comb = _split(state.body, register)
        sync_arms.append(CaseArm(value=state.name, body=sync))
        comb_arms.append(CaseArm(value=state.name, body=comb))

    defaults = tuple(d.model_copy(update={"kind": AssignKind.EMBEDDED}) for d in fsm.defaults)
    update = Sequential(
        label=f"{fsm.label}_update",
        body=(*defaults, Case(selector=Ref(register), arms=tuple(sync_arms))),
    )
    comb_block = None
    if any(arm.body for arm in comb_arms):
        comb_targets = []
        for arm in comb_arms:
            for _, stmt in walk(arm.body):
                if isinstance(stmt, Assign):
                    root = target_root(stmt.lhs)
                    if isinstance(root, Ref) and root.name not in comb_targets:
                        comb_targets.append(root.name)
        zeros = tuple(
            Assign(lhs=Ref(name), rhs=Lit(0), kind=AssignKind.EMBEDDED)
            for name in comb_targets
            if symbols is None or isinstance(symbols.lookup(name), SCALAR_TYPES)
        )
        comb_block = Combinatorial(
            label=f"{fsm.label}_comb",
            body=(*zeros, Case(selector=Ref(register), arms=tuple(comb_arms))),
        )
    return WireDecl(name=register, type=enum), update, comb_block


# --- ports -----------------------------------------------------------------


class PortPartition(BaseModel):
    model_config = ConfigDict(frozen=True)

    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    internals: tuple[str, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()


def infer_ports(circuit: CircuitDef, overrides: Mapping[str, Direction] | None = None) -> PortPartition:
    """Classify the plain signals of a port-less circuit.

    Never driven: input. Driven and read by another assignment: internal.
    Driven and otherwise unread: output. Overrides win over inference.
    """
    if circuit.ports:
        raise ElaborationError(
            error(RuleId.UNSUPPORTED, "port inference needs a circuit without declared ports", circuit=circuit.name)
        )
    elab = elaborate(circuit)
    driven = set(elab.drivers)
    overrides = dict(overrides or {})
    diagnostics = []
    inputs, outputs, internals = [], [], []
    for wire in circuit.wires:
        name = wire.name
        direction = overrides.get(name)
        readers = elab.graph.readers(name) - {name}
        if direction is Direction.INPUT:
            inputs.append(name)
        elif direction is Direction.OUTPUT:
            outputs.append(name)
        elif name not in driven:
            inputs.append(name)
            if not readers and not _read_anywhere(name, elab.statements):
                diagnostics.append(
                    warning(RuleId.DANGLING_SIGNAL, f"{name} is neither driven nor read", circuit=circuit.name, path=name)
                )
        elif readers:
            internals.append(name)
        else:
            outputs.append(name)
    for name in overrides:
        if circuit.wire(name) is None:
            diagnostics.append(
                warning(RuleId.UNKNOWN_SIGNAL, f"port override names unknown signal {name}", circuit=circuit.name)
            )
    for d in diagnostics:
        logger.warning(d.format())
    logger.info(
        "%s: inferred %d inputs, %d outputs, %d internals", circuit.name, len(inputs), len(outputs), len(internals)
    )
    return PortPartition(
        inputs=tuple(inputs), outputs=tuple(outputs), internals=tuple(internals), diagnostics=tuple(diagnostics)
    )


def _read_anywhere(name: str, statements: Sequence[Stmt]) -> bool:
    for _, stmt in walk(statements):
        match stmt:
            case Assign(lhs=lhs, rhs=rhs):
                if name in read_signals(rhs) or name in target_reads(lhs):
                    return True
            case If(cond=cond) if name in read_signals(cond):
                return True
            case Case(selector=selector) if name in read_signals(selector):
                return True
    return False


def apply_port_partition(circuit: CircuitDef, partition: PortPartition) -> CircuitDef:
    """Turn inferred inputs and outputs into declared ports, keeping their types."""
    inputs = [PortDecl(name=w.name, direction=Direction.INPUT, type=w.type) for w in circuit.wires
              if w.name in partition.inputs]
    outputs = [PortDecl(name=w.name, direction=Direction.OUTPUT, type=w.type) for w in circuit.wires
               if w.name in partition.outputs]
    wires = tuple(w for w in circuit.wires if w.name not in partition.inputs and w.name not in partition.outputs)
    return circuit.model_copy(update={"ports": (*circuit.ports, *inputs, *outputs), "wires": wires})


# --- elaboration -----------------------------------------------------------


class ElaboratedCircuit(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: CircuitDef
    symbols: SymbolTable
    statements: tuple[Stmt, ...]
    state_wires: tuple[WireDecl, ...] = ()
    plans: dict[str, CoercionPlan] = {}
    children: tuple[ElaboratedCircuit, ...] = ()
    graph: DependencyGraph
    drivers: dict[str, str] = {}
    registers: frozenset[str] = frozenset()
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def name(self) -> str:
        return self.source.name

    def child(self, name: str) -> ElaboratedCircuit:
        return next(c for c in self.children if c.name == name)

    @property
    def has_registers(self) -> bool:
        return bool(self.registers) or any(c.has_registers for c in self.children)

    def plan(self, path: str) -> CoercionPlan:
        return self.plans[path]

    def signal_type(self, key: str):
        return self.symbols.lookup(key)

    def lowered_circuit(self) -> CircuitDef:
        """The lowered form as a plain circuit: state registers become wires, FSMs are gone."""
        return self.source.model_copy(
            update={"wires": (*self.source.wires, *self.state_wires), "statements": self.statements}
        )


def _structural(circuit: CircuitDef) -> list[Diagnostic]:
    found: list[Diagnostic | None] = [policies.check_identifier(circuit.name, "circuit name")]
    signals: list[str] = []
    for decl in (*circuit.ports, *circuit.wires, *circuit.instances):
        found.append(policies.check_identifier(decl.name))
        found.append(policies.check_unique(decl.name, signals, "name"))
        signals.append(decl.name)
    typedef_names: list[str] = []
    for typedef in circuit.typedefs:
        found.append(policies.check_identifier(typedef.name, "typedef"))
        found.append(policies.check_unique(typedef.name, typedef_names, "typedef"))
        typedef_names.append(typedef.name)
    labels: list[str] = []
    for i, stmt in enumerate(circuit.statements):
        diag = policies.check_top_level(stmt)
        if diag is None and isinstance(stmt, BLOCK_TYPES):
            diag = policies.check_block_body(stmt)
            if diag is None and isinstance(stmt, Fsm):
                diag = policies.check_fsm(stmt)
            if stmt.label is not None:
                found.append(policies.check_identifier(stmt.label, "block label"))
                found.append(policies.check_unique(stmt.label, labels, "block label"))
                labels.append(stmt.label)
        found.append(diag.located(path=str(i)) if diag else None)
    return [d.located(circuit.name) for d in found if d is not None]


def _overlaps(a: str, b: str) -> bool:
    """Element keys overlap when one addresses a part of the other."""
    ta, tb = _key_tokens(a), _key_tokens(b)
    for x, y in zip(ta, tb):
        if x != y and "[*]" not in (x, y):
            return False
    return True


def _key_tokens(key: str) -> list[str]:
    tokens, current = [], ""
    for ch in key:
        if ch in "[." and current:
            tokens.append(current)
            current = ""
        current += ch
    tokens.append(current)
    return tokens


def _drivers(statements: Sequence[Stmt], circuit: str) -> tuple[dict[str, str], list[Diagnostic]]:
    """Map every driven signal to its driving context; overlapping contexts are multiple drivers."""
    by_root: dict[str, list[tuple[str, str]]] = {}
    drivers: dict[str, str] = {}
    diagnostics = []
    for i, stmt in enumerate(statements):
        if isinstance(stmt, Assign):
            context, assigns = f"assign {i}", [stmt]
        elif isinstance(stmt, (Sequential, Combinatorial)):
            context = f"{type(stmt).__name__.lower()} {stmt.label or i}"
            assigns = [a for a, _ in _block_assigns(stmt.body)]
        else:
            continue
        for assign in assigns:
            root = target_root(assign.lhs)
            key = signal_key(root) if root is not None else None
            if key is None:
                continue
            element = element_key(assign.lhs)
            for other_element, other_context in by_root.get(key, []):
                if other_context != context and _overlaps(element, other_element):
                    diagnostics.append(error(
                        RuleId.MULTIPLE_DRIVERS,
                        f"{element} is driven by {other_context} and by {context}",
                        circuit=circuit, path=str(i),
                    ))
                    break
            else:
                by_root.setdefault(key, []).append((element, context))
            drivers.setdefault(key, context)
    return drivers, diagnostics


def _typecheck(statements: Sequence[Stmt], symbols: SymbolTable) -> tuple[dict[str, CoercionPlan], list[Diagnostic]]:
    plans: dict[str, CoercionPlan] = {}
    diagnostics: list[Diagnostic] = []
    for path, stmt in walk(statements):
        try:
            match stmt:
                case Assign(lhs=lhs, rhs=rhs):
                    diag = policies.check_target(lhs, symbols.inputs, symbols.child_outputs)
                    if diag is not None:
                        raise TypeCheckError(diag)
                    target = plan_expr(lhs, symbols, path)
                    plans[f"{path}:lhs"] = CoercionPlan(target=target.natural, root=target)
                    plans[path] = check_assign(target.natural, rhs, symbols, path)
                case If(cond=cond):
                    plans[f"{path}:cond"] = check_condition(cond, symbols, path)
                case Case(selector=selector):
                    selected = plan_expr(selector, symbols, path)
                    plans[f"{path}:sel"] = CoercionPlan(target=selected.natural, root=selected)
                    diag = policies.check_choices(arm.value for arm in stmt.arms)
                    if diag is not None:
                        raise TypeCheckError(diag)
                    for arm in stmt.arms:
                        check_choice(arm.value, selected.natural, symbols, path)
        except TypeCheckError as exc:
            diagnostics.extend(d.located(symbols.circuit, path) for d in exc.diagnostics)
    return plans, diagnostics


def elaborate(circuit: CircuitDef) -> ElaboratedCircuit:
    """Resolve, lower, type-check and analyse a circuit; raise ``ElaborationError`` with every error found."""
    diagnostics: list[Diagnostic] = []

    children: dict[str, ElaboratedCircuit] = {}
    for child in circuit.child_definitions():
        known = children.get(child.name)
        if known is not None:
            if known.source != child:
                diagnostics.append(error(
                    RuleId.CONFLICTING_DEFINITION,
                    f"two different circuits are named {child.name}",
                    circuit=circuit.name,
                ))
            continue
        try:
            children[child.name] = elaborate(child)
        except ElaborationError as exc:
            diagnostics.extend(exc.diagnostics)

    diagnostics.extend(_structural(circuit))
    symbols, resolution = build_symbol_table(circuit)
    diagnostics.extend(resolution)
    for port in circuit.ports:
        if port.name in symbols.signals:
            diag = policies.check_declarable(symbols.signals[port.name])
            if diag is not None:
                diagnostics.append(diag.located(circuit.name, port.name))
    for wire in circuit.wires:
        if wire.name in symbols.signals:
            diag = policies.check_declarable(symbols.signals[wire.name], allow_state=True)
            if diag is not None:
                diagnostics.append(diag.located(circuit.name, wire.name))

    if has_errors(diagnostics):
        raise ElaborationError(diagnostics)

    statements: list[Stmt] = []
    extracted: list[Stmt] = []
    state_wires: list[WireDecl] = []
    for path, stmt in enumerate(circuit.statements):
        if isinstance(stmt, Fsm):
            wire, update, comb = lower_fsm(stmt, symbols)
            if wire.name in symbols.signals:
                diagnostics.append(error(
                    RuleId.DUPLICATE_NAME, f"state register {wire.name} clashes with a declared signal",
                    circuit=circuit.name, path=str(path),
                ))
            state_wires.append(wire)
            statements.append(update)
            if comb is not None:
                extracted.append(comb)
        else:
            statements.append(stmt)
    statements.extend(extracted)
    symbols = symbols.with_signals({w.name: w.type for w in state_wires})

    plans, typing = _typecheck(statements, symbols)
    diagnostics.extend(typing)
    drivers, driving = _drivers(statements, circuit.name)
    diagnostics.extend(driving)

    graph = build_dep_graph(circuit, statements, children, (w.name for w in state_wires))
    for cycle in graph.cycles():
        diagnostics.append(error(
            RuleId.COMBINATIONAL_CYCLE, "combinational cycle " + " -> ".join((*cycle, cycle[0])),
            circuit=circuit.name,
        ))

    for port in circuit.outputs:
        if port.name not in drivers:
            diagnostics.append(warning(
                RuleId.UNDRIVEN_OUTPUT, f"output {port.name} is never driven", circuit=circuit.name, path=port.name,
            ))
    for path, stmt in enumerate(circuit.statements):
        if isinstance(stmt, (Sequential, Combinatorial)) and not stmt.body:
            diagnostics.append(warning(
                RuleId.EMPTY_BODY, f"{type(stmt).__name__.lower()} block is empty", circuit=circuit.name,
                path=str(path),
            ))
        elif isinstance(stmt, Fsm):
            diagnostics.extend(
                warning(RuleId.EMPTY_BODY, f"state {s.name} is empty", circuit=circuit.name, path=f"{path}/{s.name}")
                for s in stmt.states if not s.body
            )

    if has_errors(diagnostics):
        for d in diagnostics:
            if d.is_error:
                logger.error(d.format())
        raise ElaborationError(diagnostics)

    registers = frozenset(
        key for stmt in statements if isinstance(stmt, Sequential)
        for a, _ in _block_assigns(stmt.body)
        if (key := signal_key(target_root(a.lhs))) is not None
    )
    warnings = tuple(d for d in diagnostics if d.severity is Severity.WARNING)
    for d in warnings:
        logger.warning(d.format())
    logger.info("elaborated %s: %d statements, %d registers", circuit.name, len(statements), len(registers))
    return ElaboratedCircuit(
        source=circuit,
        symbols=symbols,
        statements=tuple(statements),
        state_wires=tuple(state_wires),
        plans=plans,
        children=tuple(children.values()),
        graph=graph,
        drivers=drivers,
        registers=registers,
        diagnostics=warnings,
    )


# --- elaboration-time constants --------------------------------------------


Value = int | dict[str, Any]


class ConstEnv:
    """Constant values recorded from continuous assigns with constant right-hand sides.

    Values are plain integers and dicts, unmasked; the latest assign covering
    an element wins.
    """

    def __init__(self, circuit: CircuitDef):
        self.circuit = circuit.name
        self._bindings: dict[str, list[tuple[tuple[int | str, ...], Expr]]] = {}
        for stmt in circuit.statements:
            if not isinstance(stmt, Assign) or not is_constant(stmt.rhs):
                continue
            selectors = _constant_selectors(stmt.lhs)
            root = target_root(stmt.lhs)
            if selectors is None or root is None:
                continue
            self._bindings.setdefault(signal_key(root), []).append((selectors, stmt.rhs))

    def lookup(self, signal: str, selectors: tuple[int | str, ...]) -> Value:
        for bound, rhs in reversed(self._bindings.get(signal, [])):
            if selectors[: len(bound)] == bound:
                return _navigate(self._value(rhs), selectors[len(bound):], self.circuit, signal)
        raise EvaluationError(error(
            RuleId.NOT_CONSTANT, f"{signal}{_format_selectors(selectors)} has no constant value", circuit=self.circuit,
        ))

    def _value(self, expr: Expr) -> Value:
        return const_eval(expr, self)


def _constant_selectors(lhs: Expr) -> tuple[int | str, ...] | None:
    selectors: list[int | str] = []
    while isinstance(lhs, (Index, FieldAccess)):
        if isinstance(lhs, FieldAccess):
            selectors.append(lhs.name)
        else:
            value = const_value(fold_constants(lhs.index))
            if value is None:
                return None
            selectors.append(value)
        lhs = lhs.base
    return tuple(reversed(selectors))


def _navigate(value: Value, selectors: tuple[int | str, ...], circuit: str, signal: str) -> Value:
    for selector in selectors:
        if isinstance(selector, str):
            if not isinstance(value, dict) or selector not in value:
                raise EvaluationError(error(RuleId.UNKNOWN_FIELD, f"{signal} has no field {selector}", circuit=circuit))
            value = value[selector]
        elif isinstance(value, int):
            value = (value >> selector) & 1
        # an aggregate assigned to a whole array is the value of every element
    return value


def _format_selectors(selectors: tuple[int | str, ...]) -> str:
    return "".join(f".{s}" if isinstance(s, str) else f"[{s}]" for s in selectors)


def const_eval(expr: Expr, env: ConstEnv) -> Value:
    """Evaluate ``expr`` using only literals and constant assignments recorded in ``env``."""
    match fold_constants(expr):
        case Lit(value=v):
            return v
        case Unary() as e if const_value(e) is not None:
            return const_value(e)
        case Aggregate(items=items):
            return {name: const_eval(item, env) for name, item in items}
        case Ref() | Index() | FieldAccess() as e:
            selectors: list[int | str] = []
            while isinstance(e, (Index, FieldAccess)):
                if isinstance(e, FieldAccess):
                    selectors.append(e.name)
                else:
                    index = const_eval(e.index, env)
                    if not isinstance(index, int):
                        raise EvaluationError(error(RuleId.NOT_CONSTANT, "index is not an integer", circuit=env.circuit))
                    selectors.append(index)
                e = e.base
            if not isinstance(e, Ref):
                raise EvaluationError(error(RuleId.NOT_CONSTANT, "only signals can be selected", circuit=env.circuit))
            return env.lookup(e.name, tuple(reversed(selectors)))
        case Binary(op=op, lhs=lhs, rhs=rhs):
            a, b = const_eval(lhs, env), const_eval(rhs, env)
            if isinstance(a, int) and isinstance(b, int):
                folded = fold_constants(Binary(op, int_expr(a), int_expr(b)))
                value = const_value(folded)
                if value is not None:
                    return value
    raise EvaluationError(error(RuleId.NOT_CONSTANT, "expression is not constant", circuit=env.circuit))