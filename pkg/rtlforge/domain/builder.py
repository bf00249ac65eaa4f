from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator, Sequence
from contextlib import contextmanager
from typing import Any

from rtlforge.core.logging import get_logger

from . import policies
from .diagnostics import Diagnostic, RuleId, error
from .errors import ConstructionError, TypeCheckError
from .ir import (
    BLOCK_TYPES,
    Assign,
    AssignKind,
    Case,
    CaseArm,
    CircuitDef,
    Combinatorial,
    Direction,
    Expr,
    Fsm,
    If,
    InstanceDecl,
    NextState,
    PortDecl,
    PortRef,
    Ref,
    Sequential,
    StateDecl,
    Stmt,
    Typedef,
    WireDecl,
    as_expr,
    iter_exprs,
    walk,
)
from .typesys import build_symbol_table, plan_expr, resolve_type, width_of
from .types import Alias, TypeDesc, as_type

logger = get_logger(__name__)


class _Frame:
    __slots__ = ("kind", "label", "body", "arms", "default", "states", "payload")

    def __init__(self, kind: str, label: str | None = None, payload: Any = None):
        self.kind = kind
        self.label = label
        self.payload = payload
        self.body: list[Stmt] = []
        self.arms: list[CaseArm] = []
        self.default: list[Stmt] | None = None
        self.states: list[StateDecl] = []


class CircuitBuilder:
    """Builds a ``CircuitDef`` one declaration or statement at a time.

    Blocks open and close as context managers::

        b = CircuitBuilder("counter")
        tick = b.input("tick")
        count = b.output("count", "byte")
        with b.sequential("counting"):
            with b.if_(tick.eq(1)):
                with b.if_(count.eq(255)):
                    b.assign(count, 0)
                with b.else_():
                    b.assign(count, count + 1)

    Structural mistakes raise ``ConstructionError`` at the offending call.
    """

    def __init__(self, name: str):
        self.name = name
        self._fail_if(policies.check_identifier(name, "circuit name"))
        self._typedefs: list[Typedef] = []
        self._ports: list[PortDecl] = []
        self._wires: list[WireDecl] = []
        self._instances: list[InstanceDecl] = []
        self._statements: list[Stmt] = []
        self._frames: list[_Frame] = []
        self._labels: set[str] = set()

    # --- errors ------------------------------------------------------------

    def _where(self) -> str:
        labels = [f.label or f.kind for f in self._frames]
        return "/".join([str(len(self._statements)), *labels])

    def _fail(self, diagnostic: Diagnostic) -> ConstructionError:
        return ConstructionError(diagnostic.located(self.name, self._where()))

    def _fail_if(self, diagnostic: Diagnostic | None) -> None:
        if diagnostic is not None:
            raise self._fail(diagnostic)

    # --- declarations ------------------------------------------------------

    @property
    def _signal_names(self) -> set[str]:
        return {d.name for d in (*self._ports, *self._wires, *self._instances)}

    def _raw_typedefs(self) -> dict[str, TypeDesc]:
        return {t.name: t.type for t in self._typedefs}

    def _resolve(self, t: Any) -> TypeDesc:
        t = as_type(t)
        try:
            return resolve_type(t, self._raw_typedefs())
        except TypeCheckError as exc:
            raise self._fail(exc.diagnostic) from exc

    def declare_typedef(self, name: str, desc: Any) -> Typedef:
        self._fail_if(policies.check_identifier(name, "typedef"))
        self._fail_if(policies.check_unique(name, {t.name for t in self._typedefs}, "typedef"))
        typedef = Typedef(name=name, type=desc)
        try:
            resolved = resolve_type(typedef.type, {**self._raw_typedefs(), name: typedef.type})
        except TypeCheckError as exc:
            raise self._fail(exc.diagnostic) from exc
        self._fail_if(policies.check_declarable(resolved))
        self._typedefs.append(typedef)
        return typedef

    def typedef(self, name: str, desc: Any) -> Alias:
        self.declare_typedef(name, desc)
        return Alias(name)

    def declare_port(self, name: str, direction: Direction | str, type: Any = None) -> PortDecl:
        self._fail_if(policies.check_identifier(name, "port"))
        self._fail_if(policies.check_unique(name, self._signal_names, "name"))
        port = PortDecl(name=name, direction=direction, type=type)
        self._fail_if(policies.check_declarable(self._resolve(port.type)))
        self._ports.append(port)
        return port

    def input(self, name: str, type: Any = None) -> Ref:
        self.declare_port(name, Direction.INPUT, type)
        return Ref(name)

    def output(self, name: str, type: Any = None) -> Ref:
        self.declare_port(name, Direction.OUTPUT, type)
        return Ref(name)

    def inputs(self, *names: str, type: Any = None) -> tuple[Ref, ...]:
        return tuple(self.input(n, type) for n in names)

    def outputs(self, *names: str, type: Any = None) -> tuple[Ref, ...]:
        return tuple(self.output(n, type) for n in names)

    def declare_wire(self, name: str, type: Any = None, *, allow_state: bool = False) -> WireDecl:
        self._fail_if(policies.check_identifier(name, "wire"))
        self._fail_if(policies.check_unique(name, self._signal_names, "name"))
        wire = WireDecl(name=name, type=type)
        self._fail_if(policies.check_declarable(self._resolve(wire.type), allow_state=allow_state))
        self._wires.append(wire)
        return wire

    def wire(self, name: str, type: Any = None) -> Ref:
        self.declare_wire(name, type)
        return Ref(name)

    def wires(self, *names: str, type: Any = None) -> tuple[Ref, ...]:
        return tuple(self.wire(n, type) for n in names)

    def add_component(self, name: str, child: CircuitDef | Callable[[], CircuitDef]) -> InstanceDecl:
        """Instantiate a finished circuit, or a factory producing one."""
        self._fail_if(policies.check_identifier(name, "instance"))
        self._fail_if(policies.check_unique(name, self._signal_names, "name"))
        if not isinstance(child, CircuitDef):
            child = child()
        if not isinstance(child, CircuitDef):
            raise self._fail(error(RuleId.UNRESOLVED_NAME, f"component {name} is not a circuit"))
        instance = InstanceDecl(name=name, child=child)
        self._instances.append(instance)
        return instance

    component = add_component

    def port(self, instance: str, port: str) -> PortRef:
        inst = next((i for i in self._instances if i.name == instance), None)
        if inst is None:
            raise self._fail(error(RuleId.UNRESOLVED_NAME, f"no instance {instance!r}"))
        if inst.child.port(port) is None:
            raise self._fail(error(RuleId.UNRESOLVED_NAME, f"{inst.child.name} has no port {port!r}"))
        return PortRef(instance, port)

    # --- checks shared by leaves and composers ------------------------------

    def _check_names(self, expr: Expr) -> None:
        names = {d.name for d in (*self._ports, *self._wires)}
        for e in iter_exprs(expr):
            if isinstance(e, Ref) and e.name not in names:
                raise self._fail(error(RuleId.UNRESOLVED_NAME, f"{e.name} is not declared"))
            if isinstance(e, PortRef):
                inst = next((i for i in self._instances if i.name == e.instance), None)
                if inst is None or inst.child.port(e.port) is None:
                    raise self._fail(error(RuleId.UNRESOLVED_NAME, f"{e.key} is not an instance port"))

    def _check_target(self, lhs: Expr) -> None:
        inputs = {p.name for p in self._ports if p.direction is Direction.INPUT}
        child_outputs = {
            f"{i.name}.{p.name}" for i in self._instances for p in i.child.ports if p.direction is Direction.OUTPUT
        }
        self._fail_if(policies.check_target(lhs, inputs, child_outputs))

    def _selector_width(self, selector: Expr) -> int | None:
        table, _ = build_symbol_table(self._snapshot(()))
        try:
            return width_of(plan_expr(selector, table).natural)
        except (TypeCheckError, TypeError):
            return None

    def _check_assign(self, stmt: Assign) -> None:
        self._check_names(stmt.lhs)
        self._check_names(stmt.rhs)
        self._check_target(stmt.lhs)

    # --- statement plumbing -------------------------------------------------

    def _append(self, stmt: Stmt) -> None:
        if not self._frames:
            self._statements.append(stmt)
            return
        frame = self._frames[-1]
        if frame.kind == "case":
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, "statements inside a case belong to a when or default"))
        if frame.kind == "fsm":
            if not isinstance(stmt, Assign):
                raise self._fail(error(RuleId.MISPLACED_STATEMENT, "only default assigns sit directly in an fsm"))
        frame.body.append(stmt)

    def _in_block(self) -> _Frame | None:
        return next((f for f in self._frames if f.kind in ("sequential", "combinatorial", "fsm")), None)

    def _require_block(self, what: str) -> _Frame:
        block = self._in_block()
        if block is None:
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, f"{what} must sit inside a block"))
        return block

    def _open_block(self, label: str | None) -> None:
        if self._frames:
            raise self._fail(error(RuleId.NESTED_BLOCK, "blocks only appear at circuit level"))
        if label is not None:
            self._fail_if(policies.check_identifier(label, "block label"))
            self._fail_if(policies.check_unique(label, self._labels, "block label"))

    @contextmanager
    def _frame(self, frame: _Frame) -> Iterator[_Frame]:
        self._frames.append(frame)
        try:
            yield frame
        finally:
            self._frames.pop()

    # --- leaves --------------------------------------------------------------

    def assign(self, lhs: Any, rhs: Any) -> Assign:
        """Continuous at circuit level, embedded inside a block."""
        kind = AssignKind.EMBEDDED if self._frames else AssignKind.CONTINUOUS
        stmt = Assign(lhs=as_expr(lhs), rhs=as_expr(rhs), kind=kind)
        self._check_assign(stmt)
        self._append(stmt)
        return stmt

    build_assign = assign

    def comb_assign(self, lhs: Any, rhs: Any) -> Assign:
        """A combinatorial assignment inside an FSM state."""
        if not any(f.kind == "state" for f in self._frames):
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, "comb_assign outside an FSM state"))
        stmt = Assign(lhs=as_expr(lhs), rhs=as_expr(rhs), kind=AssignKind.COMBINATORIAL)
        self._check_assign(stmt)
        self._append(stmt)
        return stmt

    def next_state(self, target: str) -> NextState:
        if not any(f.kind == "state" for f in self._frames):
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, "next_state outside an FSM state"))
        stmt = NextState(target=target)
        self._append(stmt)
        return stmt

    # --- nested statements ----------------------------------------------------

    @contextmanager
    def if_(self, cond: Any) -> Iterator[None]:
        self._require_block("if")
        cond = as_expr(cond)
        self._check_names(cond)
        with self._frame(_Frame("then")) as frame:
            yield
        self._append(If(cond=cond, then_body=tuple(frame.body)))

    @contextmanager
    def else_(self) -> Iterator[None]:
        """Attach an else branch to the If just closed in the same body."""
        body = self._frames[-1].body if self._frames else self._statements
        last = body[-1] if body else None
        if not isinstance(last, If) or last.else_body:
            raise self._fail(error(RuleId.DANGLING_ELSE, "else without a preceding if"))
        with self._frame(_Frame("else")) as frame:
            yield
        body[-1] = last.model_copy(update={"else_body": tuple(frame.body)})
        if not frame.body:
            logger.warning("%s: empty else branch at %s", self.name, self._where())

    @contextmanager
    def case(self, selector: Any) -> Iterator[None]:
        self._require_block("case")
        selector = as_expr(selector)
        self._check_names(selector)
        with self._frame(_Frame("case", payload=selector)) as frame:
            yield
        self._fail_if(policies.check_choices((a.value for a in frame.arms), self._selector_width(selector)))
        self._append(Case(selector=selector, arms=tuple(frame.arms), default=tuple(frame.default or ())))

    def _case_frame(self, what: str) -> _Frame:
        if not self._frames or self._frames[-1].kind != "case":
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, f"{what} outside a case"))
        return self._frames[-1]

    @contextmanager
    def when(self, value: int | str) -> Iterator[None]:
        case_frame = self._case_frame("when")
        if case_frame.default is not None:
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, "when after default"))
        with self._frame(_Frame("when")) as frame:
            yield
        case_frame.arms.append(CaseArm(value=value, body=tuple(frame.body)))

    @contextmanager
    def default(self) -> Iterator[None]:
        case_frame = self._case_frame("default")
        if case_frame.default is not None:
            raise self._fail(error(RuleId.DUPLICATE_CHOICE, "case has two defaults"))
        with self._frame(_Frame("default")) as frame:
            yield
        case_frame.default = frame.body

    # --- blocks ----------------------------------------------------------------

    @contextmanager
    def sequential(self, label: str) -> Iterator[None]:
        self._open_block(label)
        with self._frame(_Frame("sequential", label)) as frame:
            yield
        if not frame.body:
            logger.warning("%s: sequential block %s is empty", self.name, label)
        self._labels.add(label)
        self._append(Sequential(label=label, body=tuple(frame.body)))

    @contextmanager
    def combinatorial(self, label: str | None = None) -> Iterator[None]:
        self._open_block(label)
        with self._frame(_Frame("combinatorial", label)) as frame:
            yield
        if label is not None:
            self._labels.add(label)
        self._append(Combinatorial(label=label, body=tuple(frame.body)))

    @contextmanager
    def fsm(self, label: str) -> Iterator[None]:
        self._open_block(label)
        with self._frame(_Frame("fsm", label)) as frame:
            yield
        fsm = Fsm(label=label, defaults=tuple(frame.body), states=tuple(frame.states))
        self._fail_if(policies.check_fsm(fsm))
        self._labels.add(label)
        self._append(fsm)

    @contextmanager
    def state(self, name: str) -> Iterator[None]:
        if not self._frames or self._frames[-1].kind != "fsm":
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, "state outside an fsm"))
        fsm_frame = self._frames[-1]
        self._fail_if(policies.check_identifier(name, "state"))
        self._fail_if(policies.check_unique(name, {s.name for s in fsm_frame.states}, "state"))
        with self._frame(_Frame("state", name)) as frame:
            yield
        if not frame.body:
            logger.warning("%s: state %s of fsm %s is empty", self.name, name, fsm_frame.label)
        fsm_frame.states.append(StateDecl(name=name, body=tuple(frame.body)))

    # --- composers ---------------------------------------------------------------

    def add(self, stmt: Stmt) -> Stmt:
        """Validate and append a statement built elsewhere."""
        if isinstance(stmt, BLOCK_TYPES):
            self._open_block(stmt.label)
            self._fail_if(policies.check_block_body(stmt))
            if isinstance(stmt, Fsm):
                self._fail_if(policies.check_fsm(stmt))
        elif not isinstance(stmt, Assign):
            self._require_block(type(stmt).__name__.lower())
        for _, inner in walk([stmt]):
            match inner:
                case Assign():
                    self._check_assign(inner)
                case If(cond=cond):
                    self._check_names(cond)
                case Case(selector=selector):
                    self._check_names(selector)
                    self._fail_if(
                        policies.check_choices((a.value for a in inner.arms), self._selector_width(selector))
                    )
        if self._frames:
            (stmt,) = _embedded([stmt])
        self._append(stmt)
        if isinstance(stmt, BLOCK_TYPES) and stmt.label is not None:
            self._labels.add(stmt.label)
        return stmt

    def build_if(self, cond: Any, then_body: Sequence[Stmt], else_body: Sequence[Stmt] | None = None) -> If:
        return self.add(If(cond=as_expr(cond), then_body=tuple(then_body), else_body=tuple(else_body or ())))

    def build_case(
        self,
        selector: Any,
        arms: Iterable[tuple[int | str, Sequence[Stmt]]],
        default_body: Sequence[Stmt] | None = None,
    ) -> Case:
        arms = tuple(CaseArm(value=v, body=tuple(body)) for v, body in arms)
        return self.add(Case(selector=as_expr(selector), arms=arms, default=tuple(default_body or ())))

    def build_sequential(self, label: str, body: Sequence[Stmt]) -> Sequential:
        if not body:
            logger.warning("%s: sequential block %s is empty", self.name, label)
        return self.add(Sequential(label=label, body=tuple(_embedded(body))))

    def build_combinatorial(self, label: str | None, body: Sequence[Stmt]) -> Combinatorial:
        return self.add(Combinatorial(label=label, body=tuple(_embedded(body))))

    def build_fsm(self, label: str, defaults: Sequence[Assign], states: Sequence[StateDecl]) -> Fsm:
        states = tuple(s.model_copy(update={"body": tuple(_embedded(s.body))}) for s in states)
        return self.add(Fsm(label=label, defaults=tuple(_embedded(defaults)), states=states))

    # --- result -----------------------------------------------------------------

    def _snapshot(self, statements: Sequence[Stmt]) -> CircuitDef:
        return CircuitDef(
            name=self.name,
            typedefs=tuple(self._typedefs),
            ports=tuple(self._ports),
            wires=tuple(self._wires),
            instances=tuple(self._instances),
            statements=tuple(statements),
        )

    def build(self) -> CircuitDef:
        if self._frames:
            raise self._fail(error(RuleId.MISPLACED_STATEMENT, f"block {self._frames[-1].kind} is still open"))
        circuit = self._snapshot(self._statements)
        logger.debug("built circuit %s: %d statements", self.name, len(self._statements))
        return circuit


def embedded_assign(lhs: Any, rhs: Any) -> Assign:
    """An assign for use inside composer bodies."""
    return Assign(lhs=as_expr(lhs), rhs=as_expr(rhs), kind=AssignKind.EMBEDDED)


def _embedded(body: Sequence[Stmt]) -> Iterator[Stmt]:
    """Retag continuous assigns as embedded, down through if and case bodies."""
    for stmt in body:
        match stmt:
            case Assign(kind=AssignKind.CONTINUOUS):
                yield stmt.model_copy(update={"kind": AssignKind.EMBEDDED})
            case If(then_body=then_body, else_body=else_body):
                yield stmt.model_copy(update={
                    "then_body": tuple(_embedded(then_body)), "else_body": tuple(_embedded(else_body)),
                })
            case Case(arms=arms, default=default):
                arms = tuple(arm.model_copy(update={"body": tuple(_embedded(arm.body))}) for arm in arms)
                yield stmt.model_copy(update={"arms": arms, "default": tuple(_embedded(default))})
            case _:
                yield stmt
