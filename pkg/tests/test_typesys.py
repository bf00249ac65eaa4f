import random

import pytest

from rtlforge.domain.diagnostics import RuleId
from rtlforge.domain.errors import TypeCheckError, UnresolvedAliasError
from rtlforge.domain.ir import Aggregate, Binary, BinaryOp, Expr, Lit, Ref, Unary, UnaryOp
from rtlforge.domain.typesys import (
    ConversionKind,
    SymbolTable,
    check_assign,
    check_choice,
    check_condition,
    fold_constants,
    resolve_type,
    width_of,
)
from rtlforge.domain.types import Alias, Array, Bit, BitVector, Record, RUInt, Signed, StateEnum, Unsigned

CPLX = Record({"re": Signed(6), "im": Signed(6)})


@pytest.fixture(scope="module")
def symbols() -> SymbolTable:
    return SymbolTable(
        circuit="dut",
        signals={
            "a": Bit(),
            "go": Bit(),
            "count": BitVector(8),
            "n4": BitVector(4),
            "u6": Unsigned(6),
            "s8": Signed(8),
            "mem": Array(4, CPLX),
        },
    )


def a_plus(value: int) -> Binary:
    return Binary(BinaryOp.ADD, Ref("a"), Lit(value))


@pytest.mark.parametrize(
    ("target", "rhs", "expected"),
    [
        (Bit(), Lit(1), "1"),
        (BitVector(8), a_plus(1), "(resize(a,8) + resize(1,8))"),
        (Signed(8), a_plus(5), "(signed(resize(a,8)) + signed(resize(5,8)))"),
        (BitVector(8), Binary(BinaryOp.ADD, Ref("count"), Lit(1)), "(unsigned(count) + resize(1,8))"),
        (BitVector(8), Lit(3), "resize(3,8)"),
        (Signed(8), Lit(3), "signed(resize(3,8))"),
    ],
)
def test_accepted_assignments(symbols, target, rhs, expected):
    plan = check_assign(target, rhs, symbols)
    assert plan.describe() == expected
    assert width_of(plan.root.result) == width_of(target)


@pytest.mark.parametrize(
    ("target", "rhs", "rule"),
    [
        (Bit(), Lit(42), RuleId.LITERAL_TOO_WIDE),
        (Bit(), a_plus(1), RuleId.ARITHMETIC_INTO_BIT),
        (Bit(), Binary(BinaryOp.ADD, Lit(1), Lit(1)), RuleId.LITERAL_TOO_WIDE),
        (BitVector(4), Binary(BinaryOp.ADD, Ref("count"), Lit(1)), RuleId.OPERAND_TOO_WIDE),
        (BitVector(4), Binary(BinaryOp.ADD, Ref("n4"), Lit(100)), RuleId.LITERAL_TOO_WIDE),
        (BitVector(8), Ref("n4"), RuleId.WIDTH_MISMATCH),
        (BitVector(8), Unary(UnaryOp.NEG, Lit(1)), RuleId.TYPE_MISMATCH),
    ],
)
def test_rejected_assignments(symbols, target, rhs, rule):
    with pytest.raises(TypeCheckError) as exc_info:
        check_assign(target, rhs, symbols, path="stmt")
    assert exc_info.value.diagnostic.rule is rule
    assert exc_info.value.diagnostic.path == "stmt"


def test_record_aggregate_checks_each_field(symbols):
    good = check_assign(CPLX, Ref("mem")[0], symbols)
    assert good.root.natural == CPLX

    plan = check_assign(CPLX, Aggregate((("re", Lit(1)), ("im", Lit(2)))), symbols)
    assert len(plan.root.children) == 2
    with pytest.raises(TypeCheckError) as exc_info:
        check_assign(CPLX, Aggregate((("re", Lit(1)),)), symbols)
    assert exc_info.value.diagnostic.rule is RuleId.RECORD_FIELDS


def test_bit_compared_with_literal(symbols):
    plan = check_condition(Ref("go").eq(1), symbols)
    assert plan.describe() == "(to_uint(go,1) == 1)"
    assert plan.root.natural == Bit()


def test_vector_compared_with_literal(symbols):
    plan = check_condition(Ref("count").eq(255), symbols)
    assert plan.describe() == "(unsigned(count) == 255)"
    narrow = check_condition(Ref("count").lt(3), symbols)
    assert narrow.describe() == "(unsigned(count) < resize(3,8))"


def test_bit_compares_only_with_zero_or_one(symbols):
    with pytest.raises(TypeCheckError) as exc_info:
        check_condition(Ref("go").eq(2), symbols)
    assert exc_info.value.diagnostic.rule is RuleId.LITERAL_TOO_WIDE


def test_mismatched_comparison(symbols):
    with pytest.raises(TypeCheckError) as exc_info:
        check_condition(Ref("n4").eq(Ref("count")), symbols)
    assert exc_info.value.diagnostic.rule is RuleId.WIDTH_MISMATCH


def test_condition_must_be_a_bit(symbols):
    with pytest.raises(TypeCheckError) as exc_info:
        check_condition(Ref("count"), symbols)
    assert exc_info.value.diagnostic.rule is RuleId.NOT_A_CONDITION


def test_unknown_signal(symbols):
    with pytest.raises(TypeCheckError) as exc_info:
        check_assign(Bit(), Ref("ghost"), symbols)
    assert exc_info.value.diagnostic.rule is RuleId.UNRESOLVED_NAME


def test_fold_constants():
    assert fold_constants(Binary(BinaryOp.ADD, Lit(1), Lit(1))) == Lit(2)
    assert Lit(2).type == RUInt(2)
    assert fold_constants(a_plus(1)) == a_plus(1)
    assert fold_constants(Binary(BinaryOp.EQ, Binary(BinaryOp.ADD, Lit(2), Lit(3)), Lit(5))) == Lit(1)
    assert fold_constants(Binary(BinaryOp.SUB, Lit(1), Lit(3))) == Unary(UnaryOp.NEG, Lit(2))


@pytest.mark.parametrize(
    "rhs",
    [
        Binary(BinaryOp.ADD, Lit(1), Lit(1)),
        Binary(BinaryOp.ADD, Lit(100), Lit(155)),
        Binary(BinaryOp.XOR, Lit(3), Lit(12)),
    ],
)
@pytest.mark.parametrize("target", [Bit(), BitVector(4), BitVector(8)])
def test_folding_does_not_change_the_outcome(symbols, rhs, target):
    def accepted(expr: Expr) -> bool:
        try:
            check_assign(target, expr, symbols)
        except TypeCheckError:
            return False
        return True

    assert accepted(rhs) == accepted(fold_constants(rhs))


def test_width_of():
    assert width_of(Bit()) == 1
    assert width_of(Signed(6)) == 6
    assert width_of(CPLX) == 12
    assert width_of(Array(256, CPLX)) == 3072
    assert width_of(StateEnum(name="m_state", states=("s0", "s1", "s2"))) == 2
    with pytest.raises(UnresolvedAliasError):
        width_of(Alias("cplx"))


def test_resolve_type_through_typedefs():
    typedefs = {"cplx": Record({"re": "int6", "im": "int6"}), "cplx_ary": Array(256, "cplx")}
    assert resolve_type(Alias("cplx_ary"), typedefs) == Array(256, CPLX)
    assert resolve_type(Alias("byte"), {}) == BitVector(8)
    with pytest.raises(TypeCheckError) as exc_info:
        resolve_type(Alias("t"), {"t": Alias("u"), "u": Alias("t")})
    assert exc_info.value.diagnostic.rule is RuleId.TYPE_CYCLE


def test_check_choice(symbols):
    check_choice(3, BitVector(2), symbols)
    check_choice("s1", StateEnum(name="m_state", states=("s0", "s1")), symbols)
    with pytest.raises(TypeCheckError) as exc_info:
        check_choice(4, BitVector(2), symbols)
    assert exc_info.value.diagnostic.rule is RuleId.CHOICE_WIDTH
    with pytest.raises(TypeCheckError) as exc_info:
        check_choice("s7", StateEnum(name="m_state", states=("s0", "s1")), symbols)
    assert exc_info.value.diagnostic.rule is RuleId.UNKNOWN_STATE


def test_check_assign_is_deterministic(symbols):
    first = check_assign(Signed(8), a_plus(5), symbols)
    assert check_assign(Signed(8), a_plus(5), symbols) == first


_LEAVES = ("a", "count", "n4", "u6", "s8")
_OPS = (BinaryOp.ADD, BinaryOp.SUB, BinaryOp.XOR, BinaryOp.AND)
_TARGETS = (Bit(), BitVector(8), Unsigned(8), Signed(8), BitVector(4))


def random_expr(rng: random.Random, depth: int) -> Expr:
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            return Lit(rng.randrange(0, 300))
        return Ref(rng.choice(_LEAVES))
    if rng.random() < 0.15:
        return Unary(UnaryOp.NOT, random_expr(rng, depth - 1))
    return Binary(rng.choice(_OPS), random_expr(rng, depth - 1), random_expr(rng, depth - 1))


def test_successful_plans_never_narrow(symbols):
    rng = random.Random(7)
    accepted = 0
    for _ in range(500):
        target = rng.choice(_TARGETS)
        try:
            plan = check_assign(target, random_expr(rng, 3), symbols)
        except TypeCheckError:
            continue
        accepted += 1
        assert width_of(plan.root.result) == width_of(target)
        for node in plan.root.walk():
            for conversion in node.conversions:
                assert conversion.width >= node.width
                if conversion.kind is ConversionKind.BIT_TO_UINT:
                    assert conversion.width == 1
    assert accepted > 20
