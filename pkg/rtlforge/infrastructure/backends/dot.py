"""Graphviz view of the circuit AST: one node per declaration, statement and expression."""

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

from .rendering import render
from .visitor import Visitor

if TYPE_CHECKING:
    from rtlforge.application.elaborate import ElaboratedCircuit

logger = get_logger(__name__)


class DotBuilder(Visitor):
    """Numbers nodes in pre-order: a parent always gets a smaller id than its children."""

    name = "dot"

    def __init__(self) -> None:
        self.nodes: list[tuple[int, str]] = []
        self.edges: list[tuple[int, int]] = []

    def node(self, label: str, parent: int | None) -> int:
        ident = len(self.nodes)
        self.nodes.append((ident, label))
        if parent is not None:
            self.edges.append((parent, ident))
        return ident

    def group(self, label: str, parent: int, items) -> None:
        ident = self.node(label, parent)
        for item in items:
            self.visit(item, ident)

    # declarations

    def visit_CircuitDef(self, circuit: CircuitDef, parent: int | None = None) -> None:
        root = self.node(f"circuit {circuit.name}", parent)
        for t in circuit.typedefs:
            self.node(f"typedef {t.name} : {type_name(t.type)}", root)
        for p in circuit.ports:
            self.node(f"{p.direction} {p.name} : {type_name(p.type)}", root)
        for w in circuit.wires:
            self.node(f"wire {w.name} : {type_name(w.type)}", root)
        for i in circuit.instances:
            self.node(f"instance {i.name} : {i.child.name}", root)
        for stmt in circuit.statements:
            self.visit(stmt, root)

    # statements

    def visit_Assign(self, stmt: Assign, parent: int) -> None:
        label = "comb_assign" if stmt.kind is AssignKind.COMBINATORIAL else "assign"
        ident = self.node(label, parent)
        self.visit(stmt.lhs, ident)
        self.visit(stmt.rhs, ident)

    def visit_If(self, stmt: If, parent: int) -> None:
        ident = self.node("if", parent)
        self.visit(stmt.cond, ident)
        self.group("then", ident, stmt.then_body)
        if stmt.else_body:
            self.group("else", ident, stmt.else_body)

    def visit_Case(self, stmt: Case, parent: int) -> None:
        ident = self.node("case", parent)
        self.visit(stmt.selector, ident)
        for arm in stmt.arms:
            self.group(f"when {arm.value}", ident, arm.body)
        if stmt.default:
            self.group("default", ident, stmt.default)

    def visit_NextState(self, stmt: NextState, parent: int) -> None:
        self.node(f"next_state {stmt.target}", parent)

    def visit_Sequential(self, stmt: Sequential, parent: int) -> None:
        self.group(f"sequential {stmt.label}", parent, stmt.body)

    def visit_Combinatorial(self, stmt: Combinatorial, parent: int) -> None:
        self.group(f"combinatorial {stmt.label}" if stmt.label else "combinatorial", parent, stmt.body)

    def visit_Fsm(self, stmt: Fsm, parent: int) -> None:
        ident = self.node(f"fsm {stmt.label}", parent)
        for default in stmt.defaults:
            self.visit(default, ident)
        for state in stmt.states:
            self.group(f"state {state.name}", ident, state.body)

    # expressions

    def visit_Lit(self, expr: Lit, parent: int) -> None:
        self.node(f"lit {expr.value}", parent)

    def visit_Ref(self, expr: Ref, parent: int) -> None:
        self.node(f"ref {expr.name}", parent)

    def visit_PortRef(self, expr: PortRef, parent: int) -> None:
        self.node(f"port {expr.key}", parent)

    def visit_StateLit(self, expr: StateLit, parent: int) -> None:
        self.node(f"state {expr.name}", parent)

    def visit_Unary(self, expr: Unary, parent: int) -> None:
        self.visit(expr.operand, self.node(f"unary {expr.op}", parent))

    def visit_Binary(self, expr: Binary, parent: int) -> None:
        ident = self.node(f"binary {expr.op}", parent)
        self.visit(expr.lhs, ident)
        self.visit(expr.rhs, ident)

    def visit_Index(self, expr: Index, parent: int) -> None:
        ident = self.node("index", parent)
        self.visit(expr.base, ident)
        self.visit(expr.index, ident)

    def visit_FieldAccess(self, expr: FieldAccess, parent: int) -> None:
        self.visit(expr.base, self.node(f"field {expr.name}", parent))

    def visit_Aggregate(self, expr: Aggregate, parent: int) -> None:
        ident = self.node("aggregate", parent)
        for name, item in expr.items:
            self.visit(item, self.node(f"item {name}", ident))


def emit_dot(elab: ElaboratedCircuit) -> str:
    builder = DotBuilder()
    builder.visit(elab.source)
    logger.info("dot graph for %s: %d nodes, %d edges", elab.name, len(builder.nodes), len(builder.edges))
    return render("circuit.dot.j2", name=elab.name, nodes=builder.nodes, edges=builder.edges)
