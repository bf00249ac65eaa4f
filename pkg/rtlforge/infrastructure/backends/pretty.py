"""Indented human-readable rendering of a circuit as written (FSMs are not lowered)."""

from __future__ import annotations

from typing import TYPE_CHECKING

from rtlforge.core.logging import get_logger
from rtlforge.domain.ir import (
    Aggregate,
    Assign,
    AssignKind,
    Binary,
    Case,
    CircuitDef,
    Combinatorial,
    Expr,
    FieldAccess,
    Fsm,
    If,
    Index,
    Lit,
    NextState,
    PortRef,
    Ref,
    Sequential,
    StateLit,
    Unary,
)
from rtlforge.domain.types import type_name

from .visitor import Visitor

if TYPE_CHECKING:
    from rtlforge.application.elaborate import ElaboratedCircuit

logger = get_logger(__name__)

INDENT = "  "


def expr_text(expr: Expr) -> str:
    match expr:
        case Lit(value=v):
            return str(v)
        case Ref(name=name) | StateLit(name=name):
            return name
        case PortRef():
            return expr.key
        case Unary(op=op, operand=operand):
            return f"{op}{expr_text(operand)}"
        case Binary(op=op, lhs=lhs, rhs=rhs):
            return f"({expr_text(lhs)} {op} {expr_text(rhs)})"
        case Index(base=base, index=index):
            return f"{expr_text(base)}[{expr_text(index)}]"
        case FieldAccess(base=base, name=name):
            return f"{expr_text(base)}.{name}"
        case Aggregate(items=items):
            return "{" + ", ".join(f"{n}: {expr_text(e)}" for n, e in items) + "}"
    return repr(expr)


class PrettyPrinter(Visitor):
    name = "pretty"

    def __init__(self) -> None:
        self.lines: list[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append(INDENT * depth + text)

    def body(self, statements, depth: int) -> None:
        for stmt in statements:
            self.visit(stmt, depth)

    def visit_CircuitDef(self, circuit: CircuitDef, depth: int = 0) -> None:
        self.emit(depth, f"circuit {circuit.name}")
        for t in circuit.typedefs:
            self.emit(depth + 1, f"type {t.name} = {type_name(t.type)}")
        for p in circuit.ports:
            self.emit(depth + 1, f"{p.direction} {p.name} : {type_name(p.type)}")
        for w in circuit.wires:
            self.emit(depth + 1, f"wire {w.name} : {type_name(w.type)}")
        for i in circuit.instances:
            self.emit(depth + 1, f"instance {i.name} : {i.child.name}")
        self.body(circuit.statements, depth + 1)

    def visit_Assign(self, stmt: Assign, depth: int) -> None:
        prefix = "comb " if stmt.kind is AssignKind.COMBINATORIAL else ""
        self.emit(depth, f"{prefix}{expr_text(stmt.lhs)} <= {expr_text(stmt.rhs)}")

    def visit_If(self, stmt: If, depth: int) -> None:
        self.emit(depth, f"if {expr_text(stmt.cond)}")
        self.body(stmt.then_body, depth + 1)
        if stmt.else_body:
            self.emit(depth, "else")
            self.body(stmt.else_body, depth + 1)

    def visit_Case(self, stmt: Case, depth: int) -> None:
        self.emit(depth, f"case {expr_text(stmt.selector)}")
        for arm in stmt.arms:
            self.emit(depth + 1, f"when {arm.value}")
            self.body(arm.body, depth + 2)
        if stmt.default:
            self.emit(depth + 1, "default")
            self.body(stmt.default, depth + 2)

    def visit_NextState(self, stmt: NextState, depth: int) -> None:
        self.emit(depth, f"next_state {stmt.target}")

    def visit_Sequential(self, stmt: Sequential, depth: int) -> None:
        self.emit(depth, f"sequential {stmt.label}")
        self.body(stmt.body, depth + 1)

    def visit_Combinatorial(self, stmt: Combinatorial, depth: int) -> None:
        self.emit(depth, f"combinatorial {stmt.label}" if stmt.label else "combinatorial")
        self.body(stmt.body, depth + 1)

    def visit_Fsm(self, stmt: Fsm, depth: int) -> None:
        self.emit(depth, f"fsm {stmt.label}")
        self.body(stmt.defaults, depth + 1)
        for state in stmt.states:
            self.emit(depth + 1, f"state {state.name}")
            self.body(state.body, depth + 2)


def pretty(elab: ElaboratedCircuit) -> str:
    """Render the source circuit of ``elab``, one item per line."""
    printer = PrettyPrinter()
    printer.visit(elab.source)
    logger.info("pretty-printed %s", elab.name)
    return "\n".join(printer.lines) + "\n"
