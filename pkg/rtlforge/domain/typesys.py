"""Contextual type analysis and automatic conversions.

Assignments are checked against the width and signedness of their target:
literals zero-extend when they fit, arithmetic is evaluated at the target width
with every operand resized to it, and single bits compared against 0 or 1 are
read as one-bit unsigned integers. The result of a successful check is a
``CoercionPlan``, an annotated copy of the expression that backends and the
simulator render from.
"""

from __future__ import annotations

from collections.abc import Mapping
from enum import StrEnum
from typing import Any

from pydantic import BaseModel, ConfigDict, PositiveInt

from .diagnostics import Diagnostic, RuleId, error
from .errors import TypeCheckError, UnresolvedAliasError
from .ir import (
    Aggregate,
    Binary,
    BinaryOp,
    CircuitDef,
    Direction,
    Expr,
    FieldAccess,
    Index,
    Lit,
    PortRef,
    Ref,
    StateLit,
    Unary,
    UnaryOp,
)
from .types import (
    Alias,
    Array,
    Bit,
    BitVector,
    Record,
    RUInt,
    Signed,
    StateEnum,
    TypeDesc,
    Unsigned,
    builtin_alias,
    is_logic_bit,
    literal_width,
    type_name,
)

_SCALARS = (Bit, BitVector, Unsigned, Signed)
_VECTORS = (BitVector, Unsigned, Signed)


# --- resolution ------------------------------------------------------------


def resolve_type(t: TypeDesc, typedefs: Mapping[str, TypeDesc], _visiting: tuple[str, ...] = ()) -> TypeDesc:
    """Replace every alias in ``t`` by its definition; ``typedefs`` may hold unresolved entries."""
    match t:
        case Alias(name=name):
            if name in _visiting:
                cycle = " -> ".join((*_visiting, name))
                raise TypeCheckError(error(RuleId.TYPE_CYCLE, f"typedef cycle {cycle}"))
            if name in typedefs:
                return resolve_type(typedefs[name], typedefs, (*_visiting, name))
            builtin = builtin_alias(name)
            if builtin is None:
                raise TypeCheckError(error(RuleId.UNRESOLVED_TYPE, f"unknown type {name!r}"))
            return builtin
        case Record(fields=fields):
            return Record(tuple((n, resolve_type(ft, typedefs, _visiting)) for n, ft in fields))
        case Array(length=length, element=element):
            return Array(length, resolve_type(element, typedefs, _visiting))
    return t


def width_of(t: TypeDesc) -> int:
    match t:
        case Bit():
            return 1
        case BitVector(width=w) | Unsigned(width=w) | Signed(width=w) | RUInt(width=w):
            return w
        case Record(fields=fields):
            return sum(width_of(ft) for _, ft in fields)
        case Array(length=length, element=element):
            return length * width_of(element)
        case StateEnum(states=states):
            return max(1, (len(states) - 1).bit_length())
        case Alias(name=name):
            raise UnresolvedAliasError(f"type {name!r} must be resolved before its width is known")
    raise TypeError(f"not a type descriptor: {t!r}")


class SymbolTable(BaseModel):
    """Alias-free types for every signal a circuit's statements can name.

    Instance ports are keyed ``inst.port``.
    """

    model_config = ConfigDict(frozen=True)

    circuit: str
    typedefs: dict[str, TypeDesc] = {}
    signals: dict[str, TypeDesc] = {}
    inputs: frozenset[str] = frozenset()
    outputs: frozenset[str] = frozenset()
    child_inputs: frozenset[str] = frozenset()
    child_outputs: frozenset[str] = frozenset()

    def lookup(self, key: str) -> TypeDesc | None:
        return self.signals.get(key)

    def with_signals(self, extra: Mapping[str, TypeDesc]) -> SymbolTable:
        return self.model_copy(update={"signals": {**self.signals, **extra}})


def build_symbol_table(circuit: CircuitDef) -> tuple[SymbolTable, list[Diagnostic]]:
    diagnostics: list[Diagnostic] = []
    raw: dict[str, TypeDesc] = {}
    typedefs: dict[str, TypeDesc] = {}
    for typedef in circuit.typedefs:
        raw[typedef.name] = typedef.type
        try:
            typedefs[typedef.name] = resolve_type(typedef.type, raw)
        except TypeCheckError as exc:
            diagnostics.extend(d.located(circuit.name, f"typedef {typedef.name}") for d in exc.diagnostics)

    signals: dict[str, TypeDesc] = {}
    for decl in (*circuit.ports, *circuit.wires):
        try:
            signals[decl.name] = resolve_type(decl.type, raw)
        except TypeCheckError as exc:
            diagnostics.extend(d.located(circuit.name, decl.name) for d in exc.diagnostics)

    child_inputs: set[str] = set()
    child_outputs: set[str] = set()
    for inst in circuit.instances:
        child_raw = {t.name: t.type for t in inst.child.typedefs}
        for port in inst.child.ports:
            key = f"{inst.name}.{port.name}"
            try:
                signals[key] = resolve_type(port.type, child_raw)
            except TypeCheckError as exc:
                diagnostics.extend(d.located(circuit.name, key) for d in exc.diagnostics)
            (child_inputs if port.direction is Direction.INPUT else child_outputs).add(key)

    table = SymbolTable(
        circuit=circuit.name,
        typedefs=typedefs,
        signals=signals,
        inputs=frozenset(p.name for p in circuit.inputs),
        outputs=frozenset(p.name for p in circuit.outputs),
        child_inputs=frozenset(child_inputs),
        child_outputs=frozenset(child_outputs),
    )
    return table, diagnostics


# --- constant folding ------------------------------------------------------


def const_value(expr: Expr) -> int | None:
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Unary) and expr.op is UnaryOp.NEG and isinstance(expr.operand, Lit):
        return -expr.operand.value
    return None


def int_expr(value: int) -> Expr:
    return Lit(value) if value >= 0 else Unary(UnaryOp.NEG, Lit(-value))


def _fold_binary(op: BinaryOp, a: int, b: int) -> int | None:
    match op:
        case BinaryOp.ADD:
            return a + b
        case BinaryOp.SUB:
            return a - b
        case BinaryOp.AND | BinaryOp.OR | BinaryOp.XOR if a >= 0 and b >= 0:
            return {BinaryOp.AND: a & b, BinaryOp.OR: a | b, BinaryOp.XOR: a ^ b}[op]
        case BinaryOp.EQ:
            return int(a == b)
        case BinaryOp.NEQ:
            return int(a != b)
        case BinaryOp.LT:
            return int(a < b)
        case BinaryOp.GT:
            return int(a > b)
        case BinaryOp.LE:
            return int(a <= b)
        case BinaryOp.GE:
            return int(a >= b)
    return None


def fold_constants(expr: Expr) -> Expr:
    """Collapse literal-only subtrees into a single literal (or a negated one)."""
    match expr:
        case Binary(op=op, lhs=lhs, rhs=rhs):
            lhs, rhs = fold_constants(lhs), fold_constants(rhs)
            a, b = const_value(lhs), const_value(rhs)
            if a is not None and b is not None:
                folded = _fold_binary(op, a, b)
                if folded is not None:
                    return int_expr(folded)
            return Binary(op, lhs, rhs)
        case Unary(op=UnaryOp.NEG, operand=operand):
            operand = fold_constants(operand)
            value = const_value(operand)
            if value is not None and value <= 0:
                return int_expr(-value)
            return Unary(UnaryOp.NEG, operand)
        case Unary(op=op, operand=operand):
            return Unary(op, fold_constants(operand))
        case Index(base=base, index=index):
            return Index(fold_constants(base), fold_constants(index))
        case FieldAccess(base=base, name=name):
            return FieldAccess(fold_constants(base), name)
        case Aggregate(items=items):
            return Aggregate(tuple((n, fold_constants(e)) for n, e in items))
    return expr


# --- plans -----------------------------------------------------------------


class ConversionKind(StrEnum):
    RESIZE = "resize"
    TO_UNSIGNED = "to-unsigned"
    TO_SIGNED = "to-signed"
    BIT_TO_UINT = "bit-to-uint"


class Conversion(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ConversionKind
    width: PositiveInt

    def __init__(self, kind: ConversionKind | str, width: int, **data: Any) -> None:
        super().__init__(kind=kind, width=width, **data)

    def apply(self, t: TypeDesc) -> TypeDesc:
        match self.kind:
            case ConversionKind.RESIZE:
                return Signed(self.width) if isinstance(t, Signed) else Unsigned(self.width)
            case ConversionKind.TO_SIGNED:
                return Signed(self.width)
            case ConversionKind.TO_UNSIGNED | ConversionKind.BIT_TO_UINT:
                return Unsigned(self.width)
        raise ValueError(self.kind)


class PlanNode(BaseModel):
    """One expression node with its natural type, context width and inserted conversions."""

    model_config = ConfigDict(frozen=True)

    expr: Expr
    natural: TypeDesc
    width: int
    conversions: tuple[Conversion, ...] = ()
    children: tuple[PlanNode, ...] = ()

    @property
    def result(self) -> TypeDesc:
        t = self.natural
        for conversion in self.conversions:
            t = conversion.apply(t)
        return t

    @property
    def is_signed(self) -> bool:
        return isinstance(self.result, Signed)

    def converted(self, *conversions: Conversion) -> PlanNode:
        return self.model_copy(update={"conversions": self.conversions + conversions})

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def describe(self) -> str:
        """Render in the conversion notation used by diagnostics and tests, e.g. ``signed(resize(a,8))``."""
        match self.expr:
            case Lit(value=v):
                text = str(v)
            case Ref(name=name):
                text = name
            case PortRef():
                text = self.expr.key
            case StateLit(name=name):
                text = name
            case Unary(op=op):
                text = f"{op}{self.children[0].describe()}"
            case Binary(op=op):
                text = f"({self.children[0].describe()} {op} {self.children[1].describe()})"
            case Index():
                text = f"{self.children[0].describe()}[{self.children[1].describe()}]"
            case FieldAccess(name=name):
                text = f"{self.children[0].describe()}.{name}"
            case Aggregate(items=items):
                if isinstance(self.natural, Array):
                    text = f"(others => {self.children[0].describe()})"
                else:
                    text = "{" + ", ".join(f"{n}: {c.describe()}" for (n, _), c in zip(items, self.children)) + "}"
            case _:
                text = "?"
        for conversion in self.conversions:
            match conversion.kind:
                case ConversionKind.RESIZE:
                    text = f"resize({text},{conversion.width})"
                case ConversionKind.TO_SIGNED:
                    text = f"signed({text})"
                case ConversionKind.TO_UNSIGNED:
                    text = f"unsigned({text})"
                case ConversionKind.BIT_TO_UINT:
                    text = f"to_uint({text},{conversion.width})"
        return text


class CoercionPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    target: TypeDesc
    root: PlanNode

    def describe(self) -> str:
        return self.root.describe()

    def conversions(self) -> list[tuple[Expr, Conversion]]:
        return [(node.expr, c) for node in self.root.walk() for c in node.conversions]


PlanNode.model_rebuild()


# --- checking --------------------------------------------------------------


class _Checker:
    def __init__(self, symbols: SymbolTable, path: str):
        self.symbols = symbols
        self.path = path

    def fail(self, rule: RuleId, message: str) -> TypeCheckError:
        return TypeCheckError(error(rule, message, circuit=self.symbols.circuit, path=self.path))

    # natural typing, no context

    def natural(self, expr: Expr) -> PlanNode:
        match expr:
            case Lit(value=v):
                return PlanNode(expr=expr, natural=RUInt(literal_width(v)), width=literal_width(v))
            case Ref() | PortRef():
                key = expr.name if isinstance(expr, Ref) else expr.key
                t = self.symbols.lookup(key)
                if t is None:
                    raise self.fail(RuleId.UNRESOLVED_NAME, f"{key} is not declared")
                return PlanNode(expr=expr, natural=t, width=width_of(t))
            case StateLit(name=name):
                raise self.fail(RuleId.TYPE_MISMATCH, f"state {name} may only be assigned to its state register")
            case Index(base=base, index=index):
                return self._index(expr, self.natural(base), index)
            case FieldAccess(base=base, name=name):
                pb = self.natural(base)
                if not isinstance(pb.natural, Record):
                    raise self.fail(RuleId.TYPE_MISMATCH, f"field {name} selected from non-record {type_name(pb.natural)}")
                ft = pb.natural.field_type(name)
                if ft is None:
                    raise self.fail(RuleId.UNKNOWN_FIELD, f"record has no field {name!r}")
                return PlanNode(expr=expr, natural=ft, width=width_of(ft), children=(pb,))
            case Unary(op=UnaryOp.NEG, operand=operand):
                value = const_value(expr)
                if value is not None:
                    w = _signed_width(value)
                    return PlanNode(expr=expr, natural=Signed(w), width=w, children=(self.natural(operand),))
                po = self.natural(operand)
                self._require_scalar(po)
                return PlanNode(expr=expr, natural=Signed(po.width), width=po.width, children=(po,))
            case Unary(operand=operand):
                po = self.natural(operand)
                self._require_scalar(po)
                return PlanNode(expr=expr, natural=po.natural, width=po.width, children=(po,))
            case Binary(op=op) if op.is_arithmetic:
                pl, pr = self.natural(expr.lhs), self.natural(expr.rhs)
                signed = pl.is_signed or pr.is_signed
                return self._arith(expr, max(pl.width, pr.width), signed)
            case Binary(op=op) if op.is_bitwise:
                return self._bitwise_natural(expr)
            case Binary():
                return self._compare(expr)
            case Aggregate():
                raise self.fail(RuleId.TYPE_MISMATCH, "an aggregate needs a record or array target")
        raise self.fail(RuleId.TYPE_MISMATCH, f"cannot type {expr!r}")

    def _index(self, expr: Index, pb: PlanNode, index: Expr) -> PlanNode:
        bt = pb.natural
        if isinstance(bt, Array):
            if isinstance(index, Lit):
                if index.value >= bt.length:
                    raise self.fail(RuleId.INDEX_OUT_OF_RANGE, f"index {index.value} outside 0..{bt.length - 1}")
                pi = self.natural(index)
            else:
                pi = self.natural(index)
                if not isinstance(pi.natural, (Bit, BitVector, Unsigned)):
                    raise self.fail(RuleId.TYPE_MISMATCH, f"array index must be unsigned, got {type_name(pi.natural)}")
            return PlanNode(expr=expr, natural=bt.element, width=width_of(bt.element), children=(pb, pi))
        if isinstance(bt, _VECTORS):
            if not isinstance(index, Lit):
                raise self.fail(RuleId.TYPE_MISMATCH, "bit selection needs a constant index")
            if index.value >= bt.width:
                raise self.fail(RuleId.INDEX_OUT_OF_RANGE, f"bit {index.value} outside 0..{bt.width - 1}")
            return PlanNode(expr=expr, natural=Bit(), width=1, children=(pb, self.natural(index)))
        raise self.fail(RuleId.TYPE_MISMATCH, f"cannot index a {type_name(bt)}")

    def _require_scalar(self, p: PlanNode) -> None:
        if not isinstance(p.natural, (*_SCALARS, RUInt)):
            raise self.fail(RuleId.TYPE_MISMATCH, f"{type_name(p.natural)} is not a scalar")

    # arithmetic at a given width

    def _arith(self, expr: Binary, width: int, signed: bool) -> PlanNode:
        children = (self._arith_operand(expr.lhs, width, signed), self._arith_operand(expr.rhs, width, signed))
        natural = Signed(width) if signed else Unsigned(width)
        return PlanNode(expr=expr, natural=natural, width=width, children=children)

    def _arith_operand(self, expr: Expr, width: int, signed: bool) -> PlanNode:
        if isinstance(expr, Binary) and expr.op.is_arithmetic:
            return self._arith(expr, width, signed)
        value = const_value(expr)
        if isinstance(expr, Unary) and expr.op is UnaryOp.NEG and value is None:
            inner = self._arith_operand(expr.operand, width, True)
            return PlanNode(expr=expr, natural=Signed(width), width=width, children=(inner,))
        p = self.natural(expr)
        t = p.natural
        if not isinstance(t, (*_SCALARS, RUInt)):
            raise self.fail(RuleId.TYPE_MISMATCH, f"arithmetic on {type_name(t)}")
        if p.width > width:
            if value is not None:
                raise self.fail(RuleId.LITERAL_TOO_WIDE, f"literal {value} needs {p.width} bits, context has {width}")
            raise self.fail(RuleId.OPERAND_TOO_WIDE, f"operand of {p.width} bits in a {width}-bit context")
        if value is not None and value < 0 and not signed:
            raise self.fail(RuleId.TYPE_MISMATCH, "negative literal in unsigned arithmetic")
        conversions: list[Conversion] = []
        if p.width < width:
            conversions.append(Conversion(ConversionKind.RESIZE, width))
        elif isinstance(t, Bit):
            conversions.append(Conversion(ConversionKind.BIT_TO_UINT, 1))
        elif isinstance(t, BitVector):
            conversions.append(Conversion(ConversionKind.TO_UNSIGNED, width))
        p = p.converted(*conversions)
        if signed and not p.is_signed:
            p = p.converted(Conversion(ConversionKind.TO_SIGNED, width))
        elif not signed and p.is_signed:
            p = p.converted(Conversion(ConversionKind.TO_UNSIGNED, width))
        return p

    # bitwise

    def _bitwise_natural(self, expr: Binary) -> PlanNode:
        pl, pr = self.natural(expr.lhs), self.natural(expr.rhs)
        for p in (pl, pr):
            self._require_scalar(p)
        lit_l, lit_r = isinstance(pl.natural, RUInt), isinstance(pr.natural, RUInt)
        if lit_l and not lit_r:
            pl = self._literal_into(pl, pr.natural)
            natural = pr.natural
        elif lit_r and not lit_l:
            pr = self._literal_into(pr, pl.natural)
            natural = pl.natural
        else:
            if pl.width != pr.width:
                raise self.fail(
                    RuleId.WIDTH_MISMATCH,
                    f"{expr.op} between {type_name(pl.natural)} and {type_name(pr.natural)}",
                )
            natural = Bit() if is_logic_bit(pl.natural) and is_logic_bit(pr.natural) else pl.natural
        return PlanNode(expr=expr, natural=natural, width=width_of(natural), children=(pl, pr))

    def _literal_into(self, p: PlanNode, t: TypeDesc) -> PlanNode:
        width = width_of(t)
        if p.width > width:
            raise self.fail(RuleId.LITERAL_TOO_WIDE, f"literal {p.expr.value} does not fit {type_name(t)}")
        if isinstance(t, Bit) or p.width == width:
            return p
        return p.converted(Conversion(ConversionKind.RESIZE, width))

    # comparisons

    def _compare(self, expr: Binary) -> PlanNode:
        vl, vr = const_value(expr.lhs), const_value(expr.rhs)
        if vl is not None and vr is not None:
            children = (self.natural(expr.lhs), self.natural(expr.rhs))
        elif vr is not None:
            children = self._compare_literal(expr.lhs, expr.rhs, vr)
        elif vl is not None:
            children = tuple(reversed(self._compare_literal(expr.rhs, expr.lhs, vl)))
        else:
            children = self._compare_signals(expr)
        return PlanNode(expr=expr, natural=Bit(), width=1, children=children)

    def _compare_literal(self, signal: Expr, literal: Expr, value: int) -> tuple[PlanNode, PlanNode]:
        ps, pl = self.natural(signal), self.natural(literal)
        t = ps.natural
        if isinstance(t, Bit):
            if value not in (0, 1):
                raise self.fail(RuleId.LITERAL_TOO_WIDE, f"a bit compares only against 0 or 1, not {value}")
            return ps.converted(Conversion(ConversionKind.BIT_TO_UINT, 1)), pl
        if not isinstance(t, _VECTORS):
            raise self.fail(RuleId.TYPE_MISMATCH, f"cannot compare {type_name(t)} with a literal")
        if value < 0 and not isinstance(t, Signed):
            raise self.fail(RuleId.TYPE_MISMATCH, "negative literal compared with an unsigned value")
        if pl.width > ps.width:
            raise self.fail(RuleId.LITERAL_TOO_WIDE, f"literal {value} does not fit {type_name(t)}")
        if isinstance(t, BitVector):
            ps = ps.converted(Conversion(ConversionKind.TO_UNSIGNED, ps.width))
        if pl.width < ps.width:
            pl = pl.converted(Conversion(ConversionKind.RESIZE, ps.width))
        return ps, pl

    def _compare_signals(self, expr: Binary) -> tuple[PlanNode, PlanNode]:
        pl, pr = self.natural(expr.lhs), self.natural(expr.rhs)
        tl, tr = pl.natural, pr.natural
        if not (isinstance(tl, _SCALARS) and isinstance(tr, _SCALARS)):
            if expr.op in (BinaryOp.EQ, BinaryOp.NEQ) and tl == tr:
                return pl, pr
            raise self.fail(RuleId.TYPE_MISMATCH, f"cannot compare {type_name(tl)} with {type_name(tr)}")
        if pl.width != pr.width:
            raise self.fail(RuleId.WIDTH_MISMATCH, f"comparison between {pl.width} and {pr.width} bits")
        if isinstance(tl, Signed) != isinstance(tr, Signed):
            raise self.fail(RuleId.TYPE_MISMATCH, f"comparison between {type_name(tl)} and {type_name(tr)}")
        if type(tl) is not type(tr) and pl.width == 1 and is_logic_bit(tl) and is_logic_bit(tr):
            pl = pl.converted(_to_uint1(tl))
            pr = pr.converted(_to_uint1(tr))
        elif isinstance(tl, BitVector) and (isinstance(tr, Unsigned) or expr.op not in (BinaryOp.EQ, BinaryOp.NEQ)):
            pl = pl.converted(Conversion(ConversionKind.TO_UNSIGNED, pl.width))
            if isinstance(tr, BitVector):
                pr = pr.converted(Conversion(ConversionKind.TO_UNSIGNED, pr.width))
        elif isinstance(tr, BitVector) and isinstance(tl, Unsigned):
            pr = pr.converted(Conversion(ConversionKind.TO_UNSIGNED, pr.width))
        return pl, pr

    # assignment context

    def coerce(self, expr: Expr, target: TypeDesc) -> PlanNode:
        match target:
            case Record():
                return self._coerce_record(expr, target)
            case Array():
                if isinstance(expr, Aggregate):
                    element = self.coerce(expr, target.element)
                    return PlanNode(expr=expr, natural=target, width=width_of(target), children=(element,))
                return self._same_type(expr, target)
            case StateEnum():
                if isinstance(expr, StateLit):
                    if expr.name not in target.states:
                        raise self.fail(RuleId.UNKNOWN_STATE, f"{expr.name} is not a state of {target.name}")
                    return PlanNode(expr=expr, natural=target, width=width_of(target))
                return self._same_type(expr, target)
        return self._coerce_scalar(expr, target)

    def _coerce_record(self, expr: Expr, target: Record) -> PlanNode:
        if not isinstance(expr, Aggregate):
            return self._same_type(expr, target)
        given = [n for n, _ in expr.items]
        if sorted(given) != sorted(target.field_names) or len(set(given)) != len(given):
            raise self.fail(
                RuleId.RECORD_FIELDS,
                f"aggregate fields {', '.join(given)} do not match record fields {', '.join(target.field_names)}",
            )
        children = tuple(self.coerce(e, target.field_type(n)) for n, e in expr.items)
        return PlanNode(expr=expr, natural=target, width=width_of(target), children=children)

    def _same_type(self, expr: Expr, target: TypeDesc) -> PlanNode:
        p = self.natural(expr)
        if p.natural != target:
            raise self.fail(RuleId.TYPE_MISMATCH, f"cannot assign {type_name(p.natural)} to {type_name(target)}")
        return p

    def _coerce_scalar(self, expr: Expr, target: TypeDesc) -> PlanNode:
        width = width_of(target)
        value = const_value(expr)
        if value is not None:
            return self._coerce_literal(expr, value, target)
        match expr:
            case Binary(op=op) if op.is_arithmetic:
                if isinstance(target, Bit):
                    raise self.fail(RuleId.ARITHMETIC_INTO_BIT, "the result of arithmetic cannot drive a bit")
                return self._arith(expr, width, isinstance(target, Signed))
            case Unary(op=UnaryOp.NEG):
                if not isinstance(target, Signed):
                    raise self.fail(RuleId.TYPE_MISMATCH, f"negation needs a signed target, got {type_name(target)}")
                return self._arith_operand(expr, width, True)
            case Binary(op=op) if op.is_bitwise:
                children = (self.coerce(expr.lhs, target), self.coerce(expr.rhs, target))
                return PlanNode(expr=expr, natural=target, width=width, children=children)
            case Unary(op=UnaryOp.NOT, operand=operand):
                return PlanNode(expr=expr, natural=target, width=width, children=(self.coerce(operand, target),))
            case Binary():
                if not is_logic_bit(target):
                    raise self.fail(RuleId.TYPE_MISMATCH, f"a comparison drives a bit, not {type_name(target)}")
                return self._compare(expr)
        return self._leaf(self.natural(expr), target)

    def _coerce_literal(self, expr: Expr, value: int, target: TypeDesc) -> PlanNode:
        p = self.natural(expr)
        if value < 0 and not isinstance(target, Signed):
            raise self.fail(RuleId.TYPE_MISMATCH, f"negative literal into {type_name(target)}")
        if p.width > width_of(target):
            raise self.fail(
                RuleId.LITERAL_TOO_WIDE,
                f"literal {value} (ruint{p.width}) does not fit {type_name(target)}",
            )
        if isinstance(target, Bit):
            return p
        if p.width < width_of(target):
            p = p.converted(Conversion(ConversionKind.RESIZE, width_of(target)))
        if isinstance(target, Signed) and not p.is_signed:
            p = p.converted(Conversion(ConversionKind.TO_SIGNED, width_of(target)))
        return p

    def _leaf(self, p: PlanNode, target: TypeDesc) -> PlanNode:
        t = p.natural
        if t == target or (is_logic_bit(t) and is_logic_bit(target)):
            return p
        if isinstance(t, _SCALARS) and isinstance(target, _SCALARS):
            if p.width != width_of(target):
                raise self.fail(
                    RuleId.WIDTH_MISMATCH,
                    f"cannot assign {type_name(t)} to {type_name(target)} without arithmetic",
                )
            if isinstance(target, Signed):
                return p.converted(Conversion(ConversionKind.TO_SIGNED, p.width))
            if isinstance(t, Signed):
                return p.converted(Conversion(ConversionKind.TO_UNSIGNED, p.width))
            return p
        raise self.fail(RuleId.TYPE_MISMATCH, f"cannot assign {type_name(t)} to {type_name(target)}")


def _signed_width(value: int) -> int:
    if value >= 0:
        return value.bit_length() + 1
    return (-value - 1).bit_length() + 1


def _to_uint1(t: TypeDesc) -> Conversion:
    if isinstance(t, Bit):
        return Conversion(ConversionKind.BIT_TO_UINT, 1)
    return Conversion(ConversionKind.TO_UNSIGNED, 1)


def plan_expr(expr: Expr, symbols: SymbolTable, path: str = "") -> PlanNode:
    """Natural-type plan of an expression outside any assignment context."""
    return _Checker(symbols, path).natural(fold_constants(expr))


def check_assign(lhs_type: TypeDesc, rhs: Expr, symbols: SymbolTable, path: str = "") -> CoercionPlan:
    """Check ``rhs`` against an assign target type; raises ``TypeCheckError`` on a rule violation."""
    root = _Checker(symbols, path).coerce(fold_constants(rhs), lhs_type)
    return CoercionPlan(target=lhs_type, root=root)


def check_condition(expr: Expr, symbols: SymbolTable, path: str = "") -> CoercionPlan:
    checker = _Checker(symbols, path)
    folded = fold_constants(expr)
    root = checker.natural(folded)
    if not (is_logic_bit(root.natural) or (isinstance(root.natural, RUInt) and root.width == 1)):
        raise checker.fail(RuleId.NOT_A_CONDITION, f"condition has type {type_name(root.natural)}, expected bit")
    return CoercionPlan(target=Bit(), root=root)


def check_choice(value: int | str, selector: TypeDesc, symbols: SymbolTable, path: str = "") -> None:
    checker = _Checker(symbols, path)
    if isinstance(selector, StateEnum):
        if not isinstance(value, str) or value not in selector.states:
            raise checker.fail(RuleId.UNKNOWN_STATE, f"{value} is not a state of {selector.name}")
        return
    if not isinstance(selector, _SCALARS):
        raise checker.fail(RuleId.TYPE_MISMATCH, f"cannot select on {type_name(selector)}")
    if isinstance(value, str):
        raise checker.fail(RuleId.TYPE_MISMATCH, f"state choice {value} on a {type_name(selector)} selector")
    if value < 0 or literal_width(value) > width_of(selector):
        raise checker.fail(RuleId.CHOICE_WIDTH, f"choice {value} does not fit {type_name(selector)}")
