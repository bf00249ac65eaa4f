"""Circuit IR: expressions, statements, declarations and the circuit itself.

Every node is a frozen pydantic model carrying a ``node`` discriminator, so a
finished ``CircuitDef`` is immutable, hashable and serializes to JSON and back.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence
from enum import StrEnum
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, field_validator

from .types import Bit, RUInt, TypeDesc, as_type, literal_width


class UnaryOp(StrEnum):
    NOT = "~"
    NEG = "-"


class BinaryOp(StrEnum):
    AND = "&"
    OR = "|"
    XOR = "^"
    ADD = "+"
    SUB = "-"
    EQ = "=="
    NEQ = "!="
    LT = "<"
    GT = ">"
    LE = "<="
    GE = ">="

    @property
    def is_arithmetic(self) -> bool:
        return self in (BinaryOp.ADD, BinaryOp.SUB)

    @property
    def is_bitwise(self) -> bool:
        return self in (BinaryOp.AND, BinaryOp.OR, BinaryOp.XOR)

    @property
    def is_comparison(self) -> bool:
        return not (self.is_arithmetic or self.is_bitwise)


class AssignKind(StrEnum):
    CONTINUOUS = "continuous"
    EMBEDDED = "embedded"
    COMBINATORIAL = "combinatorial"


class Direction(StrEnum):
    INPUT = "input"
    OUTPUT = "output"


class _Node(BaseModel):
    model_config = ConfigDict(frozen=True)


class _ExprOps:
    """Operator sugar shared by every expression node."""

    def __and__(self, other: Any) -> Binary:
        return Binary(BinaryOp.AND, self, as_expr(other))

    def __rand__(self, other: Any) -> Binary:
        return Binary(BinaryOp.AND, as_expr(other), self)

    def __or__(self, other: Any) -> Binary:
        return Binary(BinaryOp.OR, self, as_expr(other))

    def __ror__(self, other: Any) -> Binary:
        return Binary(BinaryOp.OR, as_expr(other), self)

    def __xor__(self, other: Any) -> Binary:
        return Binary(BinaryOp.XOR, self, as_expr(other))

    def __rxor__(self, other: Any) -> Binary:
        return Binary(BinaryOp.XOR, as_expr(other), self)

    def __add__(self, other: Any) -> Binary:
        return Binary(BinaryOp.ADD, self, as_expr(other))

    def __radd__(self, other: Any) -> Binary:
        return Binary(BinaryOp.ADD, as_expr(other), self)

    def __sub__(self, other: Any) -> Binary:
        return Binary(BinaryOp.SUB, self, as_expr(other))

    def __rsub__(self, other: Any) -> Binary:
        return Binary(BinaryOp.SUB, as_expr(other), self)

    def __invert__(self) -> Unary:
        return Unary(UnaryOp.NOT, self)

    def __neg__(self) -> Unary:
        return Unary(UnaryOp.NEG, self)

    def __getitem__(self, key: Any) -> Index | FieldAccess:
        if isinstance(key, str):
            return FieldAccess(self, key)
        return Index(self, as_expr(key))

    def eq(self, other: Any) -> Binary:
        return Binary(BinaryOp.EQ, self, as_expr(other))

    def ne(self, other: Any) -> Binary:
        return Binary(BinaryOp.NEQ, self, as_expr(other))

    def lt(self, other: Any) -> Binary:
        return Binary(BinaryOp.LT, self, as_expr(other))

    def gt(self, other: Any) -> Binary:
        return Binary(BinaryOp.GT, self, as_expr(other))

    def le(self, other: Any) -> Binary:
        return Binary(BinaryOp.LE, self, as_expr(other))

    def ge(self, other: Any) -> Binary:
        return Binary(BinaryOp.GE, self, as_expr(other))


# --- expressions -----------------------------------------------------------


class Lit(_ExprOps, _Node):
    node: Literal["lit"] = "lit"
    value: NonNegativeInt

    def __init__(self, value: int, **data: Any) -> None:
        super().__init__(value=value, **data)

    @property
    def type(self) -> RUInt:
        return RUInt(literal_width(self.value))


class Ref(_ExprOps, _Node):
    node: Literal["ref"] = "ref"
    name: str

    def __init__(self, name: str, **data: Any) -> None:
        super().__init__(name=name, **data)


class PortRef(_ExprOps, _Node):
    node: Literal["port"] = "port"
    instance: str
    port: str

    def __init__(self, instance: str, port: str, **data: Any) -> None:
        super().__init__(instance=instance, port=port, **data)

    @property
    def key(self) -> str:
        return f"{self.instance}.{self.port}"


class StateLit(_ExprOps, _Node):
    """An enumerated FSM state value; only produced by FSM lowering."""

    node: Literal["state"] = "state"
    name: str

    def __init__(self, name: str, **data: Any) -> None:
        super().__init__(name=name, **data)


class Unary(_ExprOps, _Node):
    node: Literal["unary"] = "unary"
    op: UnaryOp
    operand: Expr

    def __init__(self, op: UnaryOp | str, operand: Any, **data: Any) -> None:
        super().__init__(op=op, operand=as_expr(operand), **data)


class Binary(_ExprOps, _Node):
    node: Literal["binary"] = "binary"
    op: BinaryOp
    lhs: Expr
    rhs: Expr

    def __init__(self, op: BinaryOp | str, lhs: Any, rhs: Any, **data: Any) -> None:
        super().__init__(op=op, lhs=as_expr(lhs), rhs=as_expr(rhs), **data)


class Index(_ExprOps, _Node):
    node: Literal["index"] = "index"
    base: Expr
    index: Expr

    def __init__(self, base: Any, index: Any, **data: Any) -> None:
        super().__init__(base=as_expr(base), index=as_expr(index), **data)


class FieldAccess(_ExprOps, _Node):
    node: Literal["field"] = "field"
    base: Expr
    name: str

    def __init__(self, base: Any, name: str, **data: Any) -> None:
        super().__init__(base=as_expr(base), name=name, **data)


class Aggregate(_ExprOps, _Node):
    """A record value written field by field, e.g. ``{re: i, im: 2*i}``."""

    node: Literal["aggregate"] = "aggregate"
    items: tuple[tuple[str, Expr], ...] = Field(min_length=1)

    def __init__(self, items: Any, **data: Any) -> None:
        super().__init__(items=items, **data)

    @field_validator("items", mode="before")
    @classmethod
    def _accept_mapping(cls, value: Any) -> Any:
        if isinstance(value, Mapping):
            value = list(value.items())
        return tuple((name, as_expr(e)) for name, e in value)

    def item(self, name: str) -> Expr | None:
        return dict(self.items).get(name)


Expr = Annotated[
    Union[Lit, Ref, PortRef, StateLit, Unary, Binary, Index, FieldAccess, Aggregate],
    Field(discriminator="node"),
]

EXPR_TYPES = (Lit, Ref, PortRef, StateLit, Unary, Binary, Index, FieldAccess, Aggregate)


def as_expr(value: Any) -> Any:
    """Coerce host values into expressions: ints become literals, strings become refs."""
    if isinstance(value, bool):
        return Lit(int(value))
    if isinstance(value, int):
        return Lit(value) if value >= 0 else Unary(UnaryOp.NEG, Lit(-value))
    if isinstance(value, str):
        return Ref(value)
    if isinstance(value, Mapping):
        return Aggregate(value)
    return value


# --- statements ------------------------------------------------------------


class Assign(_Node):
    node: Literal["assign"] = "assign"
    lhs: Expr
    rhs: Expr
    kind: AssignKind = AssignKind.CONTINUOUS


class If(_Node):
    node: Literal["if"] = "if"
    cond: Expr
    then_body: tuple[Stmt, ...] = ()
    else_body: tuple[Stmt, ...] = ()


class CaseArm(_Node):
    value: int | str
    body: tuple[Stmt, ...] = ()


class Case(_Node):
    node: Literal["case"] = "case"
    selector: Expr
    arms: tuple[CaseArm, ...] = ()
    default: tuple[Stmt, ...] = ()


class NextState(_Node):
    node: Literal["next_state"] = "next_state"
    target: str


class Sequential(_Node):
    node: Literal["sequential"] = "sequential"
    label: str
    body: tuple[Stmt, ...] = ()


class Combinatorial(_Node):
    node: Literal["combinatorial"] = "combinatorial"
    label: str | None = None
    body: tuple[Stmt, ...] = ()


class StateDecl(_Node):
    name: str
    body: tuple[Stmt, ...] = ()


class Fsm(_Node):
    node: Literal["fsm"] = "fsm"
    label: str
    defaults: tuple[Assign, ...] = ()
    states: tuple[StateDecl, ...] = ()

    @property
    def state_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.states)


Stmt = Annotated[
    Union[Assign, If, Case, NextState, Sequential, Combinatorial, Fsm],
    Field(discriminator="node"),
]

BLOCK_TYPES = (Sequential, Combinatorial, Fsm)


# --- declarations ----------------------------------------------------------


class PortDecl(_Node):
    name: str
    direction: Direction
    type: TypeDesc = Field(default_factory=Bit)

    @field_validator("type", mode="before")
    @classmethod
    def _shorthand(cls, value: Any) -> Any:
        return as_type(value)


class WireDecl(_Node):
    name: str
    type: TypeDesc = Field(default_factory=Bit)

    @field_validator("type", mode="before")
    @classmethod
    def _shorthand(cls, value: Any) -> Any:
        return as_type(value)


class Typedef(_Node):
    name: str
    type: TypeDesc

    @field_validator("type", mode="before")
    @classmethod
    def _shorthand(cls, value: Any) -> Any:
        return as_type(value)


class InstanceDecl(_Node):
    name: str
    child: CircuitDef

    def port(self, name: str) -> PortRef:
        if self.child.port(name) is None:
            raise KeyError(f"{self.child.name} has no port {name!r}")
        return PortRef(self.name, name)


class CircuitDef(_Node):
    name: str
    typedefs: tuple[Typedef, ...] = ()
    ports: tuple[PortDecl, ...] = ()
    wires: tuple[WireDecl, ...] = ()
    instances: tuple[InstanceDecl, ...] = ()
    statements: tuple[Stmt, ...] = ()

    def port(self, name: str) -> PortDecl | None:
        return next((p for p in self.ports if p.name == name), None)

    def wire(self, name: str) -> WireDecl | None:
        return next((w for w in self.wires if w.name == name), None)

    def instance(self, name: str) -> InstanceDecl | None:
        return next((i for i in self.instances if i.name == name), None)

    @property
    def inputs(self) -> tuple[PortDecl, ...]:
        return tuple(p for p in self.ports if p.direction is Direction.INPUT)

    @property
    def outputs(self) -> tuple[PortDecl, ...]:
        return tuple(p for p in self.ports if p.direction is Direction.OUTPUT)

    def child_definitions(self) -> tuple[CircuitDef, ...]:
        """Distinct child definitions, in first-instantiation order."""
        seen: list[CircuitDef] = []
        for inst in self.instances:
            if inst.child not in seen:
                seen.append(inst.child)
        return tuple(seen)


for _model in (Unary, Binary, Index, FieldAccess, Aggregate, Assign, If, CaseArm, Case, Sequential, Combinatorial,
               StateDecl, Fsm, InstanceDecl, CircuitDef):
    _model.model_rebuild()


# --- traversal helpers -----------------------------------------------------


def walk(statements: Sequence[Stmt], prefix: str = "") -> Iterator[tuple[str, Stmt]]:
    """Pre-order walk yielding ``(path, stmt)`` for every statement, nested ones included.

    Paths are slash-separated: ``3/then/0`` is the first statement of the then
    branch of top-level statement 3; case arms use ``when<k>``, FSMs use
    ``defaults`` and the state name.
    """
    stack: list[tuple[str, Stmt]] = [(f"{prefix}{i}", s) for i, s in enumerate(statements)]
    stack.reverse()
    while stack:
        path, stmt = stack.pop()
        yield path, stmt
        children = list(child_statements(stmt, path))
        children.reverse()
        stack.extend(children)


def child_statements(stmt: Stmt, path: str) -> Iterator[tuple[str, Stmt]]:
    match stmt:
        case If():
            yield from ((f"{path}/then/{j}", s) for j, s in enumerate(stmt.then_body))
            yield from ((f"{path}/else/{j}", s) for j, s in enumerate(stmt.else_body))
        case Case():
            for k, arm in enumerate(stmt.arms):
                yield from ((f"{path}/when{k}/{j}", s) for j, s in enumerate(arm.body))
            yield from ((f"{path}/default/{j}", s) for j, s in enumerate(stmt.default))
        case Sequential() | Combinatorial():
            yield from ((f"{path}/{j}", s) for j, s in enumerate(stmt.body))
        case Fsm():
            yield from ((f"{path}/defaults/{j}", s) for j, s in enumerate(stmt.defaults))
            for state in stmt.states:
                yield from ((f"{path}/{state.name}/{j}", s) for j, s in enumerate(state.body))


def iter_exprs(expr: Expr) -> Iterator[Expr]:
    stack: list[Expr] = [expr]
    while stack:
        e = stack.pop()
        yield e
        match e:
            case Unary():
                stack.append(e.operand)
            case Binary():
                stack.extend((e.rhs, e.lhs))
            case Index():
                stack.extend((e.index, e.base))
            case FieldAccess():
                stack.append(e.base)
            case Aggregate():
                stack.extend(item for _, item in reversed(e.items))


def signal_key(expr: Expr) -> str | None:
    match expr:
        case Ref(name=name):
            return name
        case PortRef():
            return expr.key
    return None


def read_signals(expr: Expr) -> list[str]:
    """Signal keys read by an expression, in first-occurrence order."""
    keys: list[str] = []
    for e in iter_exprs(expr):
        key = signal_key(e)
        if key is not None and key not in keys:
            keys.append(key)
    return keys


def target_root(lhs: Expr) -> Ref | PortRef | None:
    """The signal an assign target writes into, or None if ``lhs`` is not a target chain."""
    while True:
        match lhs:
            case Ref() | PortRef():
                return lhs
            case Index(base=base) | FieldAccess(base=base):
                lhs = base
            case _:
                return None


def target_reads(lhs: Expr) -> list[str]:
    """Signals read while addressing an assign target (dynamic array indices)."""
    keys: list[str] = []
    while isinstance(lhs, (Index, FieldAccess)):
        if isinstance(lhs, Index):
            keys.extend(k for k in read_signals(lhs.index) if k not in keys)
        lhs = lhs.base
    return keys


def element_key(lhs: Expr) -> str:
    """Driver granularity key: ``mem[3].re`` for constant chains, ``mem[*]`` past a dynamic index."""
    parts: list[str] = []
    while isinstance(lhs, (Index, FieldAccess)):
        if isinstance(lhs, FieldAccess):
            parts.append(f".{lhs.name}")
        elif isinstance(lhs.index, Lit):
            parts.append(f"[{lhs.index.value}]")
        else:
            parts = ["[*]"]
        lhs = lhs.base
    root = signal_key(lhs) or "?"
    return root + "".join(reversed(parts))


def is_constant(expr: Expr) -> bool:
    return all(isinstance(e, (Lit, Unary, Binary, Aggregate)) for e in iter_exprs(expr))


def assigned_signals(statements: Sequence[Stmt]) -> list[str]:
    keys: list[str] = []
    for _, stmt in walk(statements):
        if isinstance(stmt, Assign):
            root = target_root(stmt.lhs)
            key = signal_key(root) if root is not None else None
            if key is not None and key not in keys:
                keys.append(key)
    return keys
