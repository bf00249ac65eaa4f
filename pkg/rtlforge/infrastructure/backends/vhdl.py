"""VHDL-93 emission over elaborated circuits.

One entity per distinct circuit definition (children before parents), a types
package per circuit that declares record or array types, and a shared support
package. Expressions render from the coercion plans recorded at elaboration,
so every ``resize``/``signed``/``to_uint`` call in the output corresponds to a
conversion the type rules inserted.

Identifiers are lowercased; names that are reserved, clash with a library
name, or are not basic identifiers become extended identifiers ``\\name\\``.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import TYPE_CHECKING

import regex
from pydantic import BaseModel, ConfigDict

from rtlforge.core.logging import get_logger
from rtlforge.core.settings import VhdlSettings, get_settings
from rtlforge.domain.diagnostics import RuleId, error
from rtlforge.domain.errors import EmissionError
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
    read_signals,
    signal_key,
    target_reads,
    target_root,
)
from rtlforge.domain.types import Array, Bit, BitVector, Record, RUInt, Signed, StateEnum, TypeDesc, Unsigned
from rtlforge.domain.typesys import ConversionKind, Conversion, CoercionPlan, PlanNode, const_value

from .rendering import render
from .visitor import Visitor

if TYPE_CHECKING:
    from rtlforge.application.elaborate import ElaboratedCircuit

logger = get_logger(__name__)

HEADER = "generated by rtlforge; do not edit"

RESERVED = frozenset({
    "abs", "access", "after", "alias", "all", "and", "architecture", "array", "assert", "attribute", "begin",
    "block", "body", "buffer", "bus", "case", "component", "configuration", "constant", "disconnect", "downto",
    "else", "elsif", "end", "entity", "exit", "file", "for", "function", "generate", "generic", "group", "guarded",
    "if", "impure", "in", "inertial", "inout", "is", "label", "library", "linkage", "literal", "loop", "map", "mod",
    "nand", "new", "next", "nor", "not", "null", "of", "on", "open", "or", "others", "out", "package", "port",
    "postponed", "procedure", "process", "pure", "range", "record", "register", "reject", "rem", "report", "return",
    "rol", "ror", "select", "severity", "shared", "signal", "sla", "sll", "sra", "srl", "subtype", "then", "to",
    "transport", "type", "unaffected", "units", "until", "use", "variable", "wait", "when", "while", "with", "xnor",
    "xor",
})
# library names the generated code relies on; a signal of that name would hide them
LIBRARY_NAMES = frozenset({
    "ieee", "std", "work", "std_logic", "std_logic_vector", "unsigned", "signed", "integer", "natural", "boolean",
    "resize", "to_unsigned", "to_signed", "to_integer", "rising_edge", "to_bv", "to_uint", "to_sl", "to_slv", "rtl",
})

_BASIC_IDENTIFIER = regex.compile(r"^[a-z](?:_?[a-z0-9])*$")

_OPERATORS = {
    BinaryOp.AND: "and",
    BinaryOp.OR: "or",
    BinaryOp.XOR: "xor",
    BinaryOp.ADD: "+",
    BinaryOp.SUB: "-",
    BinaryOp.EQ: "=",
    BinaryOp.NEQ: "/=",
    BinaryOp.LT: "<",
    BinaryOp.GT: ">",
    BinaryOp.LE: "<=",
    BinaryOp.GE: ">=",
}


def vhdl_identifier(name: str) -> str:
    lowered = name.lower()
    if _BASIC_IDENTIFIER.match(lowered) and lowered not in RESERVED and lowered not in LIBRARY_NAMES:
        return lowered
    return "\\" + name.replace("\\", "\\\\") + "\\"


class UnitKind(StrEnum):
    SUPPORT_PACKAGE = "support-package"
    TYPES_PACKAGE = "types-package"
    ENTITY = "entity"


class EmissionUnit(BaseModel):
    model_config = ConfigDict(frozen=True)

    file_name: str
    kind: UnitKind
    text: str


def emit_support_package(settings: VhdlSettings | None = None) -> EmissionUnit:
    settings = settings or get_settings().vhdl
    text = render("support_pkg.vhd.j2", header=HEADER, package=settings.support_package)
    return EmissionUnit(file_name=f"{settings.support_package}.vhd", kind=UnitKind.SUPPORT_PACKAGE, text=text)


# --- names -------------------------------------------------------------------


class _Namer:
    """IR keys to VHDL identifiers for one architecture; rejects two keys landing on one identifier."""

    def __init__(self, circuit: str):
        self.circuit = circuit
        self.names: dict[str, str] = {}
        self._owners: dict[str, str] = {}

    def add(self, key: str, candidate: str | None = None) -> str:
        ident = vhdl_identifier(candidate or key)
        folded = ident if ident.startswith("\\") else ident.lower()
        owner = self._owners.setdefault(folded, key)
        if owner != key:
            raise EmissionError(error(
                RuleId.NAME_COLLISION, f"{owner} and {key} both map to the VHDL name {ident}", circuit=self.circuit,
            ))
        self.names[key] = ident
        return ident

    def __getitem__(self, key: str) -> str:
        return self.names[key]


def _kind(t: TypeDesc) -> str:
    match t:
        case Bit():
            return "sl"
        case BitVector():
            return "slv"
        case Unsigned():
            return "uns"
        case Signed():
            return "sgn"
        case RUInt():
            return "int"
        case StateEnum():
            return "enum"
    return "composite"


class _TypeNames:
    """VHDL names for the record and array types one circuit uses, reusing its children's names."""

    def __init__(self, elab: ElaboratedCircuit, package: str, children: Sequence[_TypeNames]):
        self.circuit = elab.name
        self.package = package
        self.children = children
        self.names: dict[TypeDesc, str] = {}
        self.declarations: list[str] = []
        self.uses: list[str] = []
        self._preferred: dict[TypeDesc, str] = {}
        self._anonymous = 0
        for typedef in elab.source.typedefs:
            resolved = elab.symbols.typedefs.get(typedef.name)
            if isinstance(resolved, (Record, Array)):
                self._preferred.setdefault(resolved, vhdl_identifier(f"{typedef.name}_t"))
        for typedef in elab.source.typedefs:
            resolved = elab.symbols.typedefs.get(typedef.name)
            if resolved is not None:
                self._declare(resolved)
        for t in elab.symbols.signals.values():
            self._declare(t)

    def lookup(self, t: TypeDesc) -> tuple[str, str] | None:
        """(type name, package) of a composite type, searching this circuit then its children."""
        if t in self.names:
            return self.names[t], self.package
        for child in self.children:
            found = child.lookup(t)
            if found is not None:
                return found
        return None

    def _declare(self, t: TypeDesc) -> None:
        if not isinstance(t, (Record, Array)):
            return
        stack: list[tuple[TypeDesc, bool]] = [(t, False)]
        while stack:
            current, expanded = stack.pop()
            if not isinstance(current, (Record, Array)):
                continue
            found = self.lookup(current)
            if found is not None:
                if found[1] != self.package and found[1] not in self.uses:
                    self.uses.append(found[1])
                continue
            if not expanded:
                stack.append((current, True))
                inner = [ft for _, ft in current.fields] if isinstance(current, Record) else [current.element]
                stack.extend((i, False) for i in reversed(inner))
                continue
            name = self._preferred.get(current)
            if name is None:
                self._anonymous += 1
                name = f"anon{self._anonymous}_t"
            self.names[current] = name
            self.declarations.append(self._declaration(name, current))

    def _declaration(self, name: str, t: Record | Array) -> str:
        if isinstance(t, Array):
            return f"type {name} is array (0 to {t.length - 1}) of {self.type(t.element)};"
        fields = "\n".join(f"  {vhdl_identifier(n)} : {self.type(ft)};" for n, ft in t.fields)
        return f"type {name} is record\n{fields}\nend record;"

    def type(self, t: TypeDesc, state_types: dict[str, str] | None = None) -> str:
        match t:
            case Bit():
                return "std_logic"
            case BitVector(width=w):
                return f"std_logic_vector({w - 1} downto 0)"
            case Unsigned(width=w):
                return f"unsigned({w - 1} downto 0)"
            case Signed(width=w):
                return f"signed({w - 1} downto 0)"
            case StateEnum(name=name):
                return (state_types or {}).get(name, vhdl_identifier(name))
        found = self.lookup(t)
        if found is None:
            raise EmissionError(error(RuleId.UNSUPPORTED, f"no VHDL type for {t!r}", circuit=self.circuit))
        return found[0]


# --- expressions -------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Value:
    """Rendered expression text with its VHDL kind; literals stay symbolic until a context sizes them."""

    text: str
    kind: str
    width: int
    literal: int | None = None
    sized: bool = False
    signed: bool = False


_CASTS = {
    ("bool", "sl"): "to_sl({})",
    ("bool", "slv"): "to_slv(to_sl({}))",
    ("sl", "bool"): "({} = '1')",
    ("slv", "bool"): "({}(0) = '1')",
    ("sl", "slv"): "to_slv({})",
    ("slv", "sl"): "{}(0)",
    ("uns", "sl"): "{}(0)",
    ("sgn", "sl"): "{}(0)",
    ("slv", "uns"): "unsigned({})",
    ("slv", "sgn"): "signed({})",
    ("uns", "slv"): "std_logic_vector({})",
    ("sgn", "slv"): "std_logic_vector({})",
    ("uns", "sgn"): "signed({})",
    ("sgn", "uns"): "unsigned({})",
    ("sl", "uns"): "to_uint({},1)",
    ("sl", "sgn"): "signed(to_uint({},1))",
    ("uns", "int"): "to_integer({})",
    ("sgn", "int"): "to_integer({})",
    ("slv", "int"): "to_integer(unsigned({}))",
    ("sl", "int"): "to_integer(to_uint({},1))",
}


class _ExprWriter:
    def __init__(self, names: _Namer, read_names: dict[str, str], types: _TypeNames):
        self.names = names
        self.read_names = read_names
        self.types = types

    def signal(self, key: str) -> str:
        return self.read_names.get(key) or self.names[key]

    def render(self, node: PlanNode) -> _Value:
        value = self._bare(node)
        for conversion in node.conversions:
            value = self._convert(value, conversion)
        return value

    def cast(self, value: _Value, want: str) -> str:
        if value.literal is not None:
            return self._literal(value, want)
        if value.kind == want or want == "native":
            return value.text
        pattern = _CASTS.get((value.kind, want))
        return pattern.format(value.text) if pattern else value.text

    def _literal(self, value: _Value, want: str) -> str:
        v, w = value.literal, value.width
        if want == "native":
            want = ("sgn" if value.signed else "uns") if value.sized else "int"
        match want:
            case "sl":
                return f"'{v}'"
            case "slv":
                return f"to_bv({v},{w})"
            case "uns":
                return f"to_unsigned({v},{w})"
            case "sgn":
                return f"to_signed({v},{w})"
            case "bool":
                return "true" if v else "false"
        return str(v)

    def _convert(self, value: _Value, conversion: Conversion) -> _Value:
        w = conversion.width
        if value.literal is not None:
            match conversion.kind:
                case ConversionKind.RESIZE:
                    return replace(value, width=w, sized=True)
                case ConversionKind.TO_SIGNED:
                    return replace(value, width=w, sized=True, signed=True)
            return replace(value, width=w, sized=True, signed=False)
        match conversion.kind:
            case ConversionKind.RESIZE:
                kind = "sgn" if value.kind == "sgn" else "uns"
                return _Value(f"resize({value.text},{w})", kind, w)
            case ConversionKind.TO_SIGNED:
                return value if value.kind == "sgn" else _Value(f"signed({value.text})", "sgn", w)
            case ConversionKind.TO_UNSIGNED:
                return value if value.kind == "uns" else _Value(f"unsigned({value.text})", "uns", w)
        return _Value(f"to_uint({value.text},{w})", "uns", w)

    def _bare(self, node: PlanNode) -> _Value:
        e = node.expr
        constant = const_value(e)
        if constant is not None:
            return _Value(str(constant), "int", node.width, literal=constant, signed=constant < 0)
        kind = _kind(node.natural)
        match e:
            case Ref() | PortRef():
                return _Value(self.signal(signal_key(e)), kind, node.width)
            case StateLit(name=name):
                return _Value(self.names[f"@state:{name}"], "enum", node.width)
            case Index():
                base, index = (self.render(c) for c in node.children)
                return _Value(f"{base.text}({self.cast(index, 'int')})", kind, node.width)
            case FieldAccess(name=name):
                base = self.render(node.children[0])
                return _Value(f"{base.text}.{vhdl_identifier(name)}", kind, node.width)
            case Aggregate(items=items):
                if isinstance(node.natural, Array):
                    element = self.cast(self.render(node.children[0]), _kind(node.natural.element))
                    return _Value(f"(others=>{element})", kind, node.width)
                parts = [
                    f"{vhdl_identifier(n)}=>{self.cast(self.render(c), _kind(node.natural.field_type(n)))}"
                    for (n, _), c in zip(items, node.children)
                ]
                return _Value("(" + ", ".join(parts) + ")", kind, node.width)
            case Unary(op=UnaryOp.NOT):
                operand = self.cast(self.render(node.children[0]), kind)
                return _Value(f"(not {operand})", kind, node.width)
            case Unary(op=UnaryOp.NEG):
                operand = self.cast(self.render(node.children[0]), "sgn")
                return _Value(f"(-{operand})", "sgn", node.width)
            case Binary(op=op) if op.is_comparison:
                return self._compare(node, op)
            case Binary(op=op):
                lhs, rhs = (self.cast(self.render(c), kind) for c in node.children)
                return _Value(f"({lhs} {_OPERATORS[op]} {rhs})", kind, node.width)
        raise EmissionError(error(RuleId.UNSUPPORTED, f"cannot render {type(e).__name__}", circuit=self.names.circuit))

    def _compare(self, node: PlanNode, op: BinaryOp) -> _Value:
        lhs, rhs = (self.render(c) for c in node.children)
        if lhs.literal is not None:
            left, right = str(lhs.literal), self.cast(rhs, "native")
        elif rhs.literal is not None:
            left, right = self.cast(lhs, "native"), str(rhs.literal)
        else:
            left, right = lhs.text, self.cast(rhs, lhs.kind)
        return _Value(f"({left} {_OPERATORS[op]} {right})", "bool", 1)

    def value(self, plan: CoercionPlan) -> str:
        return self.cast(self.render(plan.root), _kind(plan.target))

    def condition(self, plan: CoercionPlan) -> str:
        rendered = self.render(plan.root)
        return rendered.text if rendered.kind == "bool" else self.cast(rendered, "bool")

    def target(self, node: PlanNode) -> str:
        match node.expr:
            case Ref() | PortRef():
                return self.signal(signal_key(node.expr))
            case Index():
                index = self.cast(self.render(node.children[1]), "int")
                return f"{self.target(node.children[0])}({index})"
            case FieldAccess(name=name):
                return f"{self.target(node.children[0])}.{vhdl_identifier(name)}"
        raise EmissionError(error(RuleId.UNSUPPORTED, "assign target is not a signal", circuit=self.names.circuit))


# --- statements ----------------------------------------------------------------


def _indent(lines: Iterable[str], depth: int = 1) -> list[str]:
    pad = "  " * depth
    return [pad + line if line else line for line in lines]


class _StatementWriter(Visitor):
    """Sequential-statement rendering inside processes; paths follow the elaboration plan keys."""

    name = "vhdl"

    def __init__(self, elab: ElaboratedCircuit, exprs: _ExprWriter):
        self.elab = elab
        self.exprs = exprs

    def body(self, statements: Sequence[Stmt], prefix: str) -> list[str]:
        lines: list[str] = []
        for j, stmt in enumerate(statements):
            lines.extend(self.visit(stmt, f"{prefix}/{j}"))
        return lines or ["null;"]

    def visit_Assign(self, stmt: Assign, path: str) -> list[str]:
        target = self.exprs.target(self.elab.plan(f"{path}:lhs").root)
        return [f"{target} <= {self.exprs.value(self.elab.plan(path))};"]

    def visit_If(self, stmt: If, path: str) -> list[str]:
        lines = [f"if {self.exprs.condition(self.elab.plan(f'{path}:cond'))} then"]
        lines.extend(_indent(self.body(stmt.then_body, f"{path}/then")))
        if stmt.else_body:
            lines.append("else")
            lines.extend(_indent(self.body(stmt.else_body, f"{path}/else")))
        lines.append("end if;")
        return lines

    def visit_Case(self, stmt: Case, path: str) -> list[str]:
        plan = self.elab.plan(f"{path}:sel")
        selector = self.exprs.render(plan.root)
        lines = [f"case {selector.text} is"]
        for k, arm in enumerate(stmt.arms):
            choice = self.choice(arm.value, plan.target, selector.kind)
            if arm.body:
                lines.append(f"  when {choice} =>")
                lines.extend(_indent(self.body(arm.body, f"{path}/when{k}"), 2))
            else:
                lines.append(f"  when {choice} => null;")
        if stmt.default:
            lines.append("  when others =>")
            lines.extend(_indent(self.body(stmt.default, f"{path}/default"), 2))
        else:
            lines.append("  when others => null;")
        lines.append("end case;")
        return lines

    def choice(self, value: int | str, selector: TypeDesc, kind: str) -> str:
        if isinstance(value, str):
            return self.exprs.names[f"@state:{value}"]
        if kind == "bool":
            return "true" if value else "false"
        if isinstance(selector, Bit):
            return f"'{value}'"
        width = selector.width if isinstance(selector, (BitVector, Unsigned, Signed)) else 1
        return '"' + format(value, f"0{width}b") + '"'


@dataclass
class _Entity:
    name: str
    ports: list[dict[str, str]]
    declarations: list[str]
    body: list[str]
    uses: list[str]


class _EntityWriter:
    def __init__(self, elab: ElaboratedCircuit, settings: VhdlSettings, types: _TypeNames):
        self.elab = elab
        self.settings = settings
        self.types = types
        self.names = _Namer(elab.name)
        self.read_names: dict[str, str] = {}
        self.state_types: dict[str, str] = {}

    def entity_name(self, circuit: str) -> str:
        return vhdl_identifier(circuit + self.settings.entity_suffix)

    def _read_keys(self) -> set[str]:
        keys: set[str] = set()
        for stmt in self.elab.statements:
            stack = [stmt]
            while stack:
                s = stack.pop()
                match s:
                    case Assign(lhs=lhs, rhs=rhs):
                        keys.update(read_signals(rhs))
                        keys.update(target_reads(lhs))
                    case If(cond=cond, then_body=then_body, else_body=else_body):
                        keys.update(read_signals(cond))
                        stack.extend((*then_body, *else_body))
                    case Case(selector=selector, arms=arms, default=default):
                        keys.update(read_signals(selector))
                        stack.extend(s for arm in arms for s in arm.body)
                        stack.extend(default)
                    case Sequential(body=body) | Combinatorial(body=body):
                        stack.extend(body)
        return keys

    def _name_everything(self) -> None:
        settings, source = self.settings, self.elab.source
        if self.elab.has_registers:
            for key in (settings.clock_name, settings.reset_n_name, settings.sreset_name):
                self.names.add(f"@clock:{key}", key)
        for port in source.ports:
            self.names.add(port.name)
        read = self._read_keys()
        for port in source.outputs:
            if port.name in read:
                self.read_names[port.name] = self.names.add(f"{port.name}@shadow", f"{port.name}_s")
        for wire in (*source.wires, *self.elab.state_wires):
            self.names.add(wire.name)
        for wire in self.elab.state_wires:
            enum = wire.type
            self.state_types[enum.name] = self.names.add(f"@type:{enum.name}", enum.name)
            for state in enum.states:
                self.names.add(f"@state:{state}", state)
        for inst in source.instances:
            self.names.add(f"@instance:{inst.name}", inst.name)
            for port in inst.child.ports:
                self.names.add(f"{inst.name}.{port.name}", f"{inst.name}_{port.name}")
        for stmt in self.elab.statements:
            if isinstance(stmt, (Sequential, Combinatorial)) and stmt.label:
                self.names.add(f"@label:{stmt.label}", stmt.label)

    def _type(self, key: str) -> str:
        return self.types.type(self.elab.symbols.lookup(key), self.state_types)

    def build(self) -> _Entity:
        self._name_everything()
        settings, source = self.settings, self.elab.source
        exprs = _ExprWriter(self.names, self.read_names, self.types)
        statements = _StatementWriter(self.elab, exprs)

        ports: list[dict[str, str]] = []
        if self.elab.has_registers:
            for key in (settings.clock_name, settings.reset_n_name, settings.sreset_name):
                ports.append({"name": self.names[f"@clock:{key}"], "mode": "in", "type": "std_logic"})
        for port in source.ports:
            mode = "in" if port.direction == "input" else "out"
            ports.append({"name": self.names[port.name], "mode": mode, "type": self._type(port.name)})

        declarations: list[str] = []
        for wire in self.elab.state_wires:
            states = ",".join(self.names[f"@state:{s}"] for s in wire.type.states)
            declarations.append(f"type {self.state_types[wire.type.name]} is ({states});")
        for port, shadow in self.read_names.items():
            declarations.append(f"signal {shadow} : {self._type(port)};")
        for wire in (*source.wires, *self.elab.state_wires):
            declarations.append(f"signal {self.names[wire.name]} : {self._type(wire.name)};")
        for inst in source.instances:
            for port in inst.child.ports:
                key = f"{inst.name}.{port.name}"
                declarations.append(f"signal {self.names[key]} : {self._type(key)};")

        body: list[str] = []
        for port, shadow in self.read_names.items():
            body.append(f"{self.names[port]} <= {shadow};")
        for inst in source.instances:
            body.append(self._instance(inst))
        for i, stmt in enumerate(self.elab.statements):
            path = str(i)
            match stmt:
                case Assign():
                    body.extend(statements.visit(stmt, path))
                case Sequential():
                    body.append("\n".join(self._sequential(stmt, path, statements)))
                case Combinatorial():
                    body.append("\n".join(self._combinatorial(stmt, path, statements, exprs)))

        uses = [settings.support_package, *self.types.uses]
        if self.types.declarations:
            uses.insert(1, self.types.package)
        return _Entity(self.entity_name(self.elab.name), ports, declarations, body, uses)

    def _instance(self, inst) -> str:
        child = self.elab.child(inst.child.name)
        settings = self.settings
        associations: list[str] = []
        if child.has_registers:
            for key in (settings.clock_name, settings.reset_n_name, settings.sreset_name):
                associations.append(f"{vhdl_identifier(key)} => {self.names[f'@clock:{key}']}")
        for port in inst.child.ports:
            associations.append(f"{vhdl_identifier(port.name)} => {self.names[f'{inst.name}.{port.name}']}")
        lines = [f"{self.names[f'@instance:{inst.name}']} : entity work.{self.entity_name(child.name)}"]
        if associations:
            lines.append("  port map (")
            lines.extend(f"    {a}," for a in associations[:-1])
            lines.append(f"    {associations[-1]}")
            lines.append("  );")
        else:
            lines[-1] += ";"
        return "\n".join(lines)

    def _reset_value(self, t: TypeDesc) -> str:
        match t:
            case Bit():
                return "'0'"
            case BitVector() | Unsigned() | Signed():
                return "(others=>'0')"
            case StateEnum(states=states):
                return self.names[f"@state:{states[0]}"]
            case Array(element=element):
                return f"(others=>{self._reset_value(element)})"
            case Record(fields=fields):
                return "(" + ", ".join(f"{vhdl_identifier(n)}=>{self._reset_value(ft)}" for n, ft in fields) + ")"
        return "(others=>'0')"

    def _registers(self, stmt: Sequential) -> list[str]:
        keys: list[str] = []
        stack = list(reversed(stmt.body))
        while stack:
            s = stack.pop()
            match s:
                case Assign(lhs=lhs):
                    key = signal_key(target_root(lhs))
                    if key not in keys:
                        keys.append(key)
                case If(then_body=then_body, else_body=else_body):
                    stack.extend(reversed((*then_body, *else_body)))
                case Case(arms=arms, default=default):
                    stack.extend(reversed([*(x for arm in arms for x in arm.body), *default]))
        return keys

    def _sequential(self, stmt: Sequential, path: str, statements: _StatementWriter) -> list[str]:
        s = self.settings
        clk, reset_n, sreset = (self.names[f"@clock:{k}"] for k in (s.clock_name, s.reset_n_name, s.sreset_name))
        label = self.names[f"@label:{stmt.label}"]
        resets = [
            f"{self.exprs_signal(key)} <= {self._reset_value(self.elab.symbols.lookup(key))};"
            for key in self._registers(stmt)
        ]
        lines = [
            f"{label} : process({reset_n},{clk})",
            "begin",
            f"  if {reset_n}='0' then",
            *_indent(resets or ["null;"], 2),
            f"  elsif rising_edge({clk}) then",
            f"    if {sreset}='1' then",
            *_indent(resets or ["null;"], 3),
            "    else",
            *_indent(statements.body(stmt.body, path), 3),
            "    end if;",
            "  end if;",
            f"end process {label};",
        ]
        return lines

    def exprs_signal(self, key: str) -> str:
        return self.read_names.get(key) or self.names[key]

    def _combinatorial(
        self, stmt: Combinatorial, path: str, statements: _StatementWriter, exprs: _ExprWriter,
    ) -> list[str]:
        sensitivity: list[str] = []
        stack = list(reversed(stmt.body))
        while stack:
            s = stack.pop()
            match s:
                case Assign(lhs=lhs, rhs=rhs):
                    keys = [*target_reads(lhs), *read_signals(rhs)]
                case If(cond=cond, then_body=then_body, else_body=else_body):
                    keys = read_signals(cond)
                    stack.extend(reversed((*then_body, *else_body)))
                case Case(selector=selector, arms=arms, default=default):
                    keys = read_signals(selector)
                    stack.extend(reversed([*(x for arm in arms for x in arm.body), *default]))
                case _:
                    keys = []
            for key in keys:
                name = exprs.signal(key)
                if name not in sensitivity:
                    sensitivity.append(name)
        label = f"@label:{stmt.label}" if stmt.label else None
        head = f"process({','.join(sensitivity)})" if sensitivity else "process"
        body = statements.body(stmt.body, path)
        if not sensitivity:
            body = [line for line in body if line != "null;"] + ["wait;"]
        if label is not None:
            return [f"{self.names[label]} : {head}", "begin", *_indent(body), f"end process {self.names[label]};"]
        return [head, "begin", *_indent(body), "end process;"]


# --- driver --------------------------------------------------------------------


def _post_order(elab: ElaboratedCircuit) -> list[ElaboratedCircuit]:
    ordered: list[ElaboratedCircuit] = []
    seen: set[str] = set()
    stack: list[tuple[ElaboratedCircuit, bool]] = [(elab, False)]
    while stack:
        current, expanded = stack.pop()
        if expanded:
            if current.name not in seen:
                seen.add(current.name)
                ordered.append(current)
            continue
        if current.name in seen:
            continue
        stack.append((current, True))
        stack.extend((child, False) for child in reversed(current.children))
    return ordered


def emit_vhdl(elab: ElaboratedCircuit, settings: VhdlSettings | None = None) -> list[EmissionUnit]:
    """Support package, then per distinct circuit (children first) its types package and entity."""
    settings = settings or get_settings().vhdl
    units = [emit_support_package(settings)]
    type_names: dict[str, _TypeNames] = {}
    for circuit in _post_order(elab):
        package = vhdl_identifier(circuit.name + settings.types_package_suffix)
        children = [type_names[c.name] for c in circuit.children]
        types = _TypeNames(circuit, package, children)
        type_names[circuit.name] = types
        if types.declarations:
            text = render(
                "types_pkg.vhd.j2", header=HEADER, circuit=circuit.name, package=package,
                uses=types.uses, declarations=types.declarations,
            )
            units.append(EmissionUnit(file_name=f"{package}.vhd", kind=UnitKind.TYPES_PACKAGE, text=text))
        entity = _EntityWriter(circuit, settings, types).build()
        text = render(
            "entity.vhd.j2", header=HEADER, circuit=circuit.name, entity=entity.name, uses=entity.uses,
            ports=entity.ports, declarations=entity.declarations, body=entity.body,
        )
        units.append(EmissionUnit(file_name=f"{entity.name}.vhd", kind=UnitKind.ENTITY, text=text))
        logger.info("emitted entity %s", entity.name)
    return units
