"""Translation between Sexpir trees and circuit IR.

Grammar (one circuit per file)::

    file        = circuit
    circuit     = "(" "circuit" IDENT { decl | stmt } ")"
    decl        = "(" ("input" | "output" | "signal") name typespec ")"
                | "(" "component" name "(" "circuit" IDENT ")" ")"
    name        = "(" "name" IDENT ")"
    typespec    = "(" "type" IDENT ")"
                | "(" "bits_sign" ( INT | "(" INT "signed" ")" ) ")"
    stmt        = assign | block | if | case
    block       = "(" ("combinatorial" | "sequential") (IDENT | "nil") { inner } ")"
    inner       = assign | if | case
    assign      = "(" "assign" target expr ")"
    if          = "(" "if" expr "(" "then" { inner } ")" [ "(" "else" { inner } ")" ] ")"
    case        = "(" "case" expr { "(" "when" INT { inner } ")" } [ "(" "default" { inner } ")" ] ")"
    target      = IDENT | "(" "port" IDENT IDENT ")"
                | "(" "index" target expr ")" | "(" "field" target IDENT ")"
    expr        = INT | IDENT | "(" BINOP expr expr ")" | "(" "~" expr ")" | "(" "-" expr ")"
                | "(" "port" IDENT IDENT ")" | "(" "index" expr expr ")" | "(" "field" expr IDENT ")"
    BINOP       = "==" | "!=" | "<" | ">" | "<=" | ">=" | "+" | "-" | "&" | "|" | "^"

``(bits_sign K)`` declares a K-bit vector and ``(bits_sign (K signed))`` a
K-bit signed integer; ``(type T)`` takes any type alias (``bit``, ``bvK``,
``uintK``, ``intK``, ``byte``). ``component``, ``port``, ``index``, ``field``
and the ``(K signed)`` width are extensions over the flat netlists Migen
writes. Top-level assigns are continuous.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from typing import TYPE_CHECKING

from rtlforge.core.logging import get_logger
from rtlforge.domain.builder import CircuitBuilder
from rtlforge.domain.diagnostics import Diagnostic, RuleId, error
from rtlforge.domain.errors import ConstructionError, SexpirError
from rtlforge.domain.ir import (
    Aggregate,
    Assign,
    AssignKind,
    Binary,
    BinaryOp,
    Case,
    CaseArm,
    CircuitDef,
    Combinatorial,
    Direction,
    Expr,
    FieldAccess,
    If,
    Index,
    Lit,
    PortRef,
    Ref,
    Sequential,
    StateLit,
    Stmt,
    Unary,
    UnaryOp,
    as_expr,
    signal_key,
    target_root,
)
from rtlforge.domain.types import Bit, BitVector, Signed, StateEnum, TypeDesc, Unsigned, as_type, type_name
from rtlforge.domain.typesys import width_of

from .reader import Atom, ListNode, SexpNode, sexp
from .writer import print_sexp

if TYPE_CHECKING:
    from rtlforge.application.elaborate import ElaboratedCircuit

logger = get_logger(__name__)

DECLARATIONS = ("input", "output", "signal")
BINARY_OPS = {op.value for op in BinaryOp}
NIL = "nil"


def _at(node: SexpNode) -> dict[str, int]:
    return {"line": node.line, "column": node.column}


# --- validation --------------------------------------------------------------


class _Validator:
    """Collects every grammar violation; walks with an explicit stack."""

    def __init__(self) -> None:
        self.found: list[Diagnostic] = []

    def flag(self, rule: RuleId, message: str, node: SexpNode) -> None:
        self.found.append(error(rule, message, **_at(node)))

    def run(self, root: SexpNode) -> list[Diagnostic]:
        if not isinstance(root, ListNode) or root.head != "circuit":
            self.flag(RuleId.UNKNOWN_FORM, "a Sexpir file holds one (circuit <name> ...) form", root)
            return self.found
        if not root.args or not self._ident(root.args[0], "circuit name"):
            if not root.args:
                self.flag(RuleId.ARITY, "circuit needs a name", root)
            return self.found
        stack: list[tuple[str, SexpNode]] = []
        for item in reversed(root.args[1:]):
            stack.append(("top", item))
        while stack:
            role, node = stack.pop()
            match role:
                case "top" | "inner":
                    self._statement(node, role, stack)
                case "expr" | "target":
                    self._expression(node, role, stack)
        return self.found

    def _ident(self, node: SexpNode, what: str) -> bool:
        if isinstance(node, Atom) and node.is_identifier:
            return True
        shown = node.text if isinstance(node, Atom) else "a list"
        self.flag(RuleId.BAD_IDENTIFIER, f"{what} must be an identifier, got {shown}", node)
        return False

    def _statement(self, node: SexpNode, role: str, stack: list[tuple[str, SexpNode]]) -> None:
        if not isinstance(node, ListNode) or node.head is None:
            self.flag(RuleId.UNKNOWN_FORM, "expected a statement form", node)
            return
        head, args = node.head, node.args
        if head in (*DECLARATIONS, "component"):
            if role != "top":
                self.flag(RuleId.MISPLACED_STATEMENT, f"{head} declarations belong at circuit level", node)
            self._declaration(node)
            return
        match head:
            case "assign":
                if len(args) != 2:
                    self.flag(RuleId.ARITY, f"assign takes a target and an expression, got {len(args)} items", node)
                    return
                stack.extend((("expr", args[1]), ("target", args[0])))
            case "combinatorial" | "sequential":
                if role != "top":
                    self.flag(RuleId.NESTED_BLOCK, f"{head} blocks only appear at circuit level", node)
                if not args:
                    self.flag(RuleId.ARITY, f"{head} needs a label or nil", node)
                    return
                self._ident(args[0], f"{head} label")
                stack.extend(("inner", s) for s in reversed(args[1:]))
            case "if":
                self._if(node, role, stack)
            case "case":
                self._case(node, role, stack)
            case _:
                self.flag(RuleId.UNKNOWN_FORM, f"unknown form {head}", node)

    def _if(self, node: ListNode, role: str, stack: list[tuple[str, SexpNode]]) -> None:
        if role == "top":
            self.flag(RuleId.MISPLACED_STATEMENT, "if must sit inside a block", node)
        args = node.args
        if len(args) not in (2, 3):
            self.flag(RuleId.ARITY, f"if takes a condition, a then branch and an optional else, got {len(args)}", node)
            return
        branches = args[1:]
        for branch, expected in zip(branches, ("then", "else")):
            if not isinstance(branch, ListNode) or branch.head != expected:
                self.flag(RuleId.UNKNOWN_FORM, f"expected ({expected} ...)", branch)
                continue
            stack.extend(("inner", s) for s in reversed(branch.args))
        stack.append(("expr", args[0]))

    def _case(self, node: ListNode, role: str, stack: list[tuple[str, SexpNode]]) -> None:
        if role == "top":
            self.flag(RuleId.MISPLACED_STATEMENT, "case must sit inside a block", node)
        args = node.args
        if not args:
            self.flag(RuleId.ARITY, "case needs a selector", node)
            return
        seen_default = False
        for arm in args[1:]:
            if not isinstance(arm, ListNode) or arm.head not in ("when", "default"):
                self.flag(RuleId.UNKNOWN_FORM, "case arms are (when <int> ...) or (default ...)", arm)
                continue
            if seen_default:
                self.flag(RuleId.MISPLACED_STATEMENT, "default must be the last case arm", arm)
            if arm.head == "when":
                if not arm.args or not isinstance(arm.args[0], Atom) or not arm.args[0].is_int:
                    self.flag(RuleId.ARITY, "when needs an integer choice", arm)
                    continue
                body = arm.args[1:]
            else:
                seen_default = True
                body = arm.args
            stack.extend(("inner", s) for s in reversed(body))
        stack.append(("expr", args[0]))

    def _declaration(self, node: ListNode) -> None:
        fields: dict[str, ListNode] = {}
        allowed = ("name", "circuit") if node.head == "component" else ("name", "type", "bits_sign")
        for item in node.args:
            if not isinstance(item, ListNode) or item.head not in allowed:
                shown = item.head if isinstance(item, ListNode) else item.text
                self.flag(RuleId.UNKNOWN_FORM, f"unknown field {shown} in {node.head}", item)
                continue
            if item.head in fields:
                self.flag(RuleId.ARITY, f"field {item.head} given twice", item)
            fields[item.head] = item
        name = fields.get("name")
        if name is None:
            self.flag(RuleId.MISSING_FIELD, f"{node.head} without (name ...)", node)
        elif len(name.args) != 1:
            self.flag(RuleId.ARITY, "name takes exactly one identifier", name)
        else:
            self._ident(name.args[0], f"{node.head} name")
        if node.head == "component":
            circuit = fields.get("circuit")
            if circuit is None:
                self.flag(RuleId.MISSING_FIELD, "component without (circuit ...)", node)
            elif len(circuit.args) != 1:
                self.flag(RuleId.ARITY, "circuit takes exactly one identifier", circuit)
            else:
                self._ident(circuit.args[0], "component circuit")
            return
        given = [fields[k] for k in ("type", "bits_sign") if k in fields]
        if not given:
            self.flag(RuleId.MISSING_FIELD, f"{node.head} without (type ...) or (bits_sign ...)", node)
        elif len(given) == 2:
            self.flag(RuleId.ARITY, "give either type or bits_sign, not both", node)
        for spec in given:
            if len(spec.args) != 1:
                self.flag(RuleId.ARITY, f"{spec.head} takes exactly one argument", spec)
            elif spec.head == "type":
                self._ident(spec.args[0], "type")
            else:
                self._width(spec.args[0])

    def _width(self, node: SexpNode) -> None:
        if isinstance(node, ListNode):
            if len(node) == 2 and isinstance(node.children[1], Atom) and node.children[1].text == "signed":
                node = node.children[0]
            else:
                self.flag(RuleId.BAD_WIDTH, "signed widths are written (K signed)", node)
                return
        if not isinstance(node, Atom) or not node.is_int or node.value < 1:
            shown = node.text if isinstance(node, Atom) else "a list"
            self.flag(RuleId.BAD_WIDTH, f"width must be a positive integer, got {shown}", node)

    def _expression(self, node: SexpNode, role: str, stack: list[tuple[str, SexpNode]]) -> None:
        if isinstance(node, Atom):
            if role == "target" and not node.is_identifier:
                self.flag(RuleId.ILLEGAL_TARGET, f"cannot assign to {node.text}", node)
            elif not (node.is_int or node.is_identifier):
                self.flag(RuleId.BAD_IDENTIFIER, f"{node.text} is neither an integer nor an identifier", node)
            return
        head, args = node.head, node.args
        if head is None:
            self.flag(RuleId.UNKNOWN_FORM, "expected an operator or selector form", node)
            return
        if role == "target" and head not in ("port", "index", "field"):
            self.flag(RuleId.ILLEGAL_TARGET, f"({head} ...) is not assignable", node)
            return
        match head:
            case "port":
                if len(args) != 2:
                    self.flag(RuleId.ARITY, "port takes an instance and a port name", node)
                    return
                self._ident(args[0], "instance")
                self._ident(args[1], "port")
            case "index":
                if len(args) != 2:
                    self.flag(RuleId.ARITY, "index takes a base and an index", node)
                    return
                stack.extend((("expr", args[1]), (role, args[0])))
            case "field":
                if len(args) != 2:
                    self.flag(RuleId.ARITY, "field takes a base and a field name", node)
                    return
                self._ident(args[1], "field")
                stack.append((role, args[0]))
            case "~":
                if len(args) != 1:
                    self.flag(RuleId.ARITY, f"~ takes one operand, got {len(args)}", node)
                    return
                stack.append(("expr", args[0]))
            case _ if head in BINARY_OPS:
                expected = (1, 2) if head == "-" else (2,)
                if len(args) not in expected:
                    self.flag(RuleId.ARITY, f"{head} takes {' or '.join(map(str, expected))} operands, got {len(args)}", node)
                    return
                stack.extend(("expr", a) for a in reversed(args))
            case _:
                self.flag(RuleId.UNKNOWN_FORM, f"unknown form {head}", node)


def validate(root: SexpNode) -> list[Diagnostic]:
    """Every grammar violation in ``root``, without building any IR."""
    return _Validator().run(root)


# --- lowering ----------------------------------------------------------------


def component_circuits(root: SexpNode) -> list[str]:
    """Names of the circuits a Sexpir file instantiates through ``component``."""
    names: list[str] = []
    if isinstance(root, ListNode):
        for item in root.args[1:]:
            if isinstance(item, ListNode) and item.head == "component":
                for field in item.args:
                    if isinstance(field, ListNode) and field.head == "circuit" and field.args:
                        if field.args[0].text not in names:
                            names.append(field.args[0].text)
    return names


def _field(node: ListNode, name: str) -> SexpNode | None:
    for item in node.args:
        if isinstance(item, ListNode) and item.head == name:
            return item.args[0]
    return None


def _decl_type(node: ListNode) -> TypeDesc:
    alias = _field(node, "type")
    if alias is not None:
        return as_type(alias.text)
    width = _field(node, "bits_sign")
    if isinstance(width, ListNode):
        return Signed(width.children[0].value)
    return BitVector(width.value)


class _Lowerer:
    def __init__(self, root: ListNode, components: Mapping[str, CircuitDef]):
        self.root = root
        self.components = components
        self.builder = CircuitBuilder(root.args[0].text)

    def _located(self, exc: ConstructionError, node: SexpNode) -> SexpirError:
        return SexpirError([d.model_copy(update=_at(node)) for d in exc.diagnostics])

    def run(self) -> CircuitDef:
        body = self.root.args[1:]
        for node in body:
            if node.head in DECLARATIONS or node.head == "component":
                try:
                    self._declaration(node)
                except ConstructionError as exc:
                    raise self._located(exc, node) from exc
        for k, node in enumerate(body):
            if node.head in DECLARATIONS or node.head == "component":
                continue
            try:
                self._top(node, k)
            except ConstructionError as exc:
                raise self._located(exc, node) from exc
        return self.builder.build()

    def _declaration(self, node: ListNode) -> None:
        name = _field(node, "name").text
        match node.head:
            case "input":
                self.builder.declare_port(name, Direction.INPUT, _decl_type(node))
            case "output":
                self.builder.declare_port(name, Direction.OUTPUT, _decl_type(node))
            case "signal":
                self.builder.declare_wire(name, _decl_type(node))
            case "component":
                circuit = _field(node, "circuit").text
                child = self.components.get(circuit)
                if child is None:
                    raise SexpirError(error(
                        RuleId.UNRESOLVED_COMPONENT, f"no circuit {circuit} available for component {name}",
                        circuit=self.builder.name, **_at(node),
                    ))
                self.builder.add_component(name, child)

    def _top(self, node: ListNode, k: int) -> None:
        match node.head:
            case "assign":
                self.builder.assign(self._expr(node.args[0]), self._expr(node.args[1]))
            case "sequential":
                label = node.args[0].text
                label = f"sequential_{k}" if label == NIL else label
                self.builder.build_sequential(label, self._body(node.args[1:]))
            case "combinatorial":
                label = node.args[0].text
                self.builder.build_combinatorial(None if label == NIL else label, self._body(node.args[1:]))

    def _body(self, nodes: Sequence[SexpNode]) -> list[Stmt]:
        return [self._stmt(n) for n in nodes]

    def _stmt(self, node: ListNode) -> Stmt:
        args = node.args
        match node.head:
            case "assign":
                return Assign(lhs=self._expr(args[0]), rhs=self._expr(args[1]), kind=AssignKind.EMBEDDED)
            case "if":
                else_body = self._body(args[2].args) if len(args) == 3 else []
                return If(cond=self._expr(args[0]), then_body=tuple(self._body(args[1].args)), else_body=tuple(else_body))
            case "case":
                arms: list[CaseArm] = []
                default: list[Stmt] = []
                for arm in args[1:]:
                    if arm.head == "when":
                        arms.append(CaseArm(value=arm.args[0].value, body=tuple(self._body(arm.args[1:]))))
                    else:
                        default = self._body(arm.args)
                return Case(selector=self._expr(args[0]), arms=tuple(arms), default=tuple(default))
        raise SexpirError(error(RuleId.UNKNOWN_FORM, f"unknown form {node.head}", **_at(node)))

    def _expr(self, node: SexpNode) -> Expr:
        if isinstance(node, Atom):
            return as_expr(node.value) if node.is_int else Ref(node.text)
        head, args = node.head, node.args
        match head:
            case "port":
                return PortRef(args[0].text, args[1].text)
            case "index":
                return Index(self._expr(args[0]), self._expr(args[1]))
            case "field":
                return FieldAccess(self._expr(args[0]), args[1].text)
            case "~":
                return Unary(UnaryOp.NOT, self._expr(args[0]))
            case "-" if len(args) == 1:
                return Unary(UnaryOp.NEG, self._expr(args[0]))
        return Binary(BinaryOp(head), self._expr(args[0]), self._expr(args[1]))


def lower_to_ir(root: SexpNode, components: Mapping[str, CircuitDef] | None = None) -> CircuitDef:
    """Build a circuit from a validated Sexpir tree; ``components`` supplies instantiated circuits by name."""
    found = validate(root)
    if found:
        raise SexpirError(found)
    circuit = _Lowerer(root, components or {}).run()
    logger.info("lowered Sexpir circuit %s", circuit.name)
    return circuit


# --- emission ----------------------------------------------------------------


def _type_form(t: TypeDesc, name: str) -> ListNode:
    match t:
        case StateEnum():
            return sexp("bits_sign", width_of(t))
        case Bit() | BitVector() | Unsigned() | Signed():
            return sexp("type", type_name(t))
    raise SexpirError(error(RuleId.UNSUPPORTED, f"{name}: {type_name(t)} has no Sexpir spelling"))


class _Emitter:
    def __init__(self, elab: ElaboratedCircuit) -> None:
        self.elab = elab
        self.symbols = elab.symbols

    def _enum(self, key: str | None) -> StateEnum | None:
        t = self.symbols.lookup(key) if key else None
        return t if isinstance(t, StateEnum) else None

    def circuit(self) -> ListNode:
        source = self.elab.source
        if source.typedefs:
            raise SexpirError(error(
                RuleId.UNSUPPORTED, "typedefs have no Sexpir spelling", circuit=source.name,
            ))
        items: list[SexpNode] = [Atom("circuit"), Atom(source.name)]
        for port in source.ports:
            items.append(sexp(port.direction.value, sexp("name", port.name),
                              _type_form(self.symbols.lookup(port.name), port.name)))
        for wire in (*source.wires, *self.elab.state_wires):
            items.append(sexp("signal", sexp("name", wire.name), _type_form(self.symbols.lookup(wire.name), wire.name)))
        for inst in source.instances:
            items.append(sexp("component", sexp("name", inst.name), sexp("circuit", inst.child.name)))
        items.extend(self.stmt(s) for s in self.elab.statements)
        return ListNode(tuple(items))

    def stmt(self, stmt: Stmt) -> ListNode:
        match stmt:
            case Assign(lhs=lhs, rhs=rhs):
                enum = self._enum(signal_key(target_root(lhs)))
                return sexp("assign", self.expr(lhs), self.expr(rhs, enum))
            case Sequential(label=label, body=body):
                return sexp("sequential", label, *(self.stmt(s) for s in body))
            case Combinatorial(label=label, body=body):
                return sexp("combinatorial", label or NIL, *(self.stmt(s) for s in body))
            case If(cond=cond, then_body=then_body, else_body=else_body):
                parts = [sexp("then", *(self.stmt(s) for s in then_body))]
                if else_body:
                    parts.append(sexp("else", *(self.stmt(s) for s in else_body)))
                return sexp("if", self.expr(cond), *parts)
            case Case(selector=selector, arms=arms, default=default):
                enum = self._enum(signal_key(selector))
                parts = [
                    sexp("when", enum.index(arm.value) if isinstance(arm.value, str) else arm.value,
                         *(self.stmt(s) for s in arm.body))
                    for arm in arms
                ]
                if default:
                    parts.append(sexp("default", *(self.stmt(s) for s in default)))
                return sexp("case", self.expr(selector), *parts)
        raise SexpirError(error(
            RuleId.UNSUPPORTED, f"{type(stmt).__name__} has no Sexpir form", circuit=self.elab.name,
        ))

    def expr(self, expr: Expr, enum: StateEnum | None = None) -> SexpNode:
        match expr:
            case Lit(value=v):
                return Atom(str(v))
            case Ref(name=name):
                return Atom(name)
            case StateLit(name=name) if enum is not None:
                return Atom(str(enum.index(name)))
            case PortRef(instance=inst, port=port):
                return sexp("port", inst, port)
            case Unary(op=UnaryOp.NEG, operand=Lit(value=v)):
                return Atom(f"-{v}")
            case Unary(op=op, operand=operand):
                return sexp(op.value, self.expr(operand))
            case Binary(op=op, lhs=lhs, rhs=rhs):
                return sexp(op.value, self.expr(lhs), self.expr(rhs))
            case Index(base=base, index=index):
                return sexp("index", self.expr(base), self.expr(index))
            case FieldAccess(base=base, name=name):
                return sexp("field", self.expr(base), name)
            case Aggregate():
                raise SexpirError(error(RuleId.UNSUPPORTED, "record aggregates have no Sexpir form", circuit=self.elab.name))
        raise SexpirError(error(
            RuleId.UNSUPPORTED, f"{type(expr).__name__} has no Sexpir form", circuit=self.elab.name,
        ))


def emit_tree(elab: ElaboratedCircuit) -> ListNode:
    return _Emitter(elab).circuit()


def emit_sexpir(elab: ElaboratedCircuit) -> str:
    """Canonical Sexpir text of an elaborated circuit, FSMs in lowered form with integer states."""
    text = print_sexp(emit_tree(elab))
    logger.info("emitted Sexpir for %s", elab.name)
    return text


def emit_sexpir_files(elab: ElaboratedCircuit) -> dict[str, str]:
    """``<name>.sexp`` text for the circuit and every distinct descendant, children first."""
    files: dict[str, str] = {}
    stack = [(elab, False)]
    while stack:
        current, expanded = stack.pop()
        name = f"{current.name}.sexp"
        if expanded:
            files.setdefault(name, emit_sexpir(current))
        elif name not in files:
            stack.append((current, True))
            stack.extend((child, False) for child in reversed(current.children))
    return files
