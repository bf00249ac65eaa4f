import pytest

from rtlforge.application import builtins
from rtlforge.domain.builder import CircuitBuilder, embedded_assign
from rtlforge.domain.diagnostics import RuleId
from rtlforge.domain.errors import ConstructionError
from rtlforge.domain.ir import (
    Assign,
    AssignKind,
    Binary,
    BinaryOp,
    Case,
    CaseArm,
    CircuitDef,
    Direction,
    Fsm,
    If,
    Lit,
    NextState,
    PortRef,
    Ref,
    Sequential,
    Unary,
    UnaryOp,
    walk,
)
from rtlforge.domain.types import Alias, Array, Bit, RUInt, Record, literal_width


def test_port_declarations(builder: CircuitBuilder):
    a = builder.declare_port("a", Direction.INPUT)
    count = builder.declare_port("count", "output", "byte")

    assert a.type == Bit()
    assert count.type == Alias("byte")
    assert [p.name for p in builder.build().ports] == ["a", "count"]


def test_duplicate_port_is_rejected(builder: CircuitBuilder):
    builder.input("a")
    with pytest.raises(ConstructionError) as exc_info:
        builder.input("a")
    assert exc_info.value.diagnostic.rule is RuleId.DUPLICATE_NAME
    assert exc_info.value.diagnostic.circuit == "dut"


def test_literal_type_cannot_be_declared(builder: CircuitBuilder):
    with pytest.raises(ConstructionError) as exc_info:
        builder.input("a", RUInt(4))
    assert exc_info.value.diagnostic.rule is RuleId.LITERAL_ONLY_TYPE


def test_wires_resolve_through_typedefs(builder: CircuitBuilder):
    builder.wire("w1", "bv8")
    builder.typedef("cplx", Record({"re": "int6", "im": "int6"}))
    builder.typedef("cplx_ary", Array(256, "cplx"))
    builder.wire("mem", "cplx_ary")
    circuit = builder.build()

    assert circuit.wire("w1").type == Alias("bv8")
    assert [t.name for t in circuit.typedefs] == ["cplx", "cplx_ary"]


def test_unknown_wire_type(builder: CircuitBuilder):
    with pytest.raises(ConstructionError) as exc_info:
        builder.wire("x", "nosuchtype")
    assert exc_info.value.diagnostic.rule is RuleId.UNRESOLVED_TYPE


def test_typedef_cycle(builder: CircuitBuilder):
    with pytest.raises(ConstructionError) as exc_info:
        builder.typedef("t", "t")
    assert exc_info.value.diagnostic.rule is RuleId.TYPE_CYCLE


def test_typedef_forward_reference(builder: CircuitBuilder):
    with pytest.raises(ConstructionError) as exc_info:
        builder.typedef("cplx_ary", Array(4, "cplx"))
    assert exc_info.value.diagnostic.rule is RuleId.UNRESOLVED_TYPE


def test_full_adder_instances(full_adder: CircuitDef):
    assert [i.name for i in full_adder.instances] == ["ha1", "ha2"]
    # the class and an instance of it are the same definition
    assert len(full_adder.child_definitions()) == 1
    assert full_adder.statements[0] == Assign(lhs=PortRef("ha1", "a"), rhs=Ref("a"))


def test_adder_has_one_child_definition():
    adder = builtins.adder(8)
    assert [i.name for i in adder.instances] == [f"fa_{i}" for i in range(8)]
    assert len(adder.child_definitions()) == 1


def test_duplicate_instance(builder: CircuitBuilder, half_adder: CircuitDef):
    builder.component("ha1", half_adder)
    with pytest.raises(ConstructionError) as exc_info:
        builder.component("ha1", half_adder)
    assert exc_info.value.diagnostic.rule is RuleId.DUPLICATE_NAME


def test_assign_kinds(builder: CircuitBuilder):
    a, b = builder.inputs("a", "b")
    s = builder.output("s")
    q = builder.output("q")
    top = builder.assign(s, a ^ b)
    with builder.sequential("regs"):
        inner = builder.assign(q, a)

    assert top.kind is AssignKind.CONTINUOUS
    assert top.rhs == Binary(BinaryOp.XOR, Ref("a"), Ref("b"))
    assert inner.kind is AssignKind.EMBEDDED


def test_composed_blocks_embed_nested_assigns(builder: CircuitBuilder):
    sel = builder.input("sel", "bv2")
    q = builder.output("q")
    r = builder.output("r")
    nested = If(
        cond=sel.eq(0),
        then_body=(Assign(lhs=q, rhs=Lit(1)),),
        else_body=(Case(selector=sel, arms=(CaseArm(value=1, body=(Assign(lhs=q, rhs=Lit(0)),)),)),),
    )
    block = builder.build_sequential("regs", [Assign(lhs=r, rhs=Lit(0)), nested])
    with builder.combinatorial("mux"):
        composed = builder.build_if(sel.eq(3), [Assign(lhs=r, rhs=Lit(1))])

    kinds = {s.kind for _, s in walk([block, composed]) if isinstance(s, Assign)}
    assert kinds == {AssignKind.EMBEDDED}


def test_input_is_not_a_target(builder: CircuitBuilder):
    a = builder.input("a")
    with pytest.raises(ConstructionError) as exc_info:
        builder.assign(a, 1)
    assert exc_info.value.diagnostic.rule is RuleId.ILLEGAL_TARGET


def test_child_output_is_not_a_target(builder: CircuitBuilder, half_adder: CircuitDef):
    ha = builder.component("ha", half_adder)
    with pytest.raises(ConstructionError) as exc_info:
        builder.assign(ha.port("sum"), 0)
    assert exc_info.value.diagnostic.rule is RuleId.ILLEGAL_TARGET


def test_undeclared_name(builder: CircuitBuilder):
    s = builder.output("s")
    with pytest.raises(ConstructionError) as exc_info:
        builder.assign(s, Ref("ghost"))
    assert exc_info.value.diagnostic.rule is RuleId.UNRESOLVED_NAME


def test_if_else_merges_into_one_node(counter: CircuitDef):
    (block,) = counter.statements
    assert isinstance(block, Sequential)
    (outer,) = block.body
    inner = outer.then_body[0]
    assert isinstance(inner, If)
    assert len(inner.then_body) == 1
    assert len(inner.else_body) == 1


def test_if_else_matches_composer():
    def build(two_calls: bool) -> CircuitDef:
        b = CircuitBuilder("c")
        tick = b.input("tick")
        count = b.output("count", "byte")
        with b.sequential("counting"):
            if two_calls:
                with b.if_(count.eq(255)):
                    b.assign(count, 0)
                with b.else_():
                    b.assign(count, count + 1)
            else:
                b.build_if(
                    count.eq(255),
                    [embedded_assign(count, 0)],
                    [embedded_assign(count, count + 1)],
                )
        return b.build()

    assert build(True) == build(False)


def test_if_without_else(fsm1: CircuitDef):
    (fsm,) = fsm1.statements
    guard = fsm.states[0].body[1]
    assert isinstance(guard, If)
    assert guard.else_body == ()
    assert guard.then_body == (NextState(target="s1"),)


def test_dangling_else(builder: CircuitBuilder):
    builder.output("q")
    with builder.sequential("regs"):
        with pytest.raises(ConstructionError) as exc_info:
            with builder.else_():
                pass
    assert exc_info.value.diagnostic.rule is RuleId.DANGLING_ELSE


def test_case_arms(builder: CircuitBuilder):
    sel = builder.input("sel", "bv2")
    q = builder.output("q", "bv2")
    with builder.combinatorial():
        with builder.case(sel):
            for value in (0, 1, 2):
                with builder.when(value):
                    builder.assign(q, value)
            with builder.default():
                builder.assign(q, 3)
    (block,) = builder.build().statements
    (case,) = block.body

    assert isinstance(case, Case)
    assert [arm.value for arm in case.arms] == [0, 1, 2]
    assert len(case.default) == 1


@pytest.mark.parametrize(
    ("values", "rule"),
    [
        ((1, 1), RuleId.DUPLICATE_CHOICE),
        ((5,), RuleId.CHOICE_WIDTH),
    ],
)
def test_bad_case_choices(builder: CircuitBuilder, values, rule):
    sel = builder.input("sel", "bv2")
    q = builder.output("q")
    with builder.combinatorial():
        with pytest.raises(ConstructionError) as exc_info:
            with builder.case(sel):
                for value in values:
                    with builder.when(value):
                        builder.assign(q, 0)
    assert exc_info.value.diagnostic.rule is rule


def test_nested_block(builder: CircuitBuilder):
    with builder.sequential("outer"):
        with pytest.raises(ConstructionError) as exc_info:
            with builder.sequential("inner"):
                pass
    assert exc_info.value.diagnostic.rule is RuleId.NESTED_BLOCK


def test_empty_sequential_is_accepted(builder: CircuitBuilder):
    with builder.sequential("idle"):
        pass
    assert builder.build().statements == (Sequential(label="idle"),)


def test_fsm_structure(fsm1: CircuitDef):
    (fsm,) = fsm1.statements
    assert isinstance(fsm, Fsm)
    assert fsm.state_names == ("s0", "s1", "s2")
    assert fsm.defaults == (Assign(lhs=Ref("f"), rhs=Lit(0), kind=AssignKind.EMBEDDED),)


def test_fsm_unknown_next_state(builder: CircuitBuilder):
    with pytest.raises(ConstructionError) as exc_info:
        with builder.fsm("m"):
            with builder.state("s0"):
                builder.next_state("s9")
    assert exc_info.value.diagnostic.rule is RuleId.UNKNOWN_STATE


def test_fsm_without_states(builder: CircuitBuilder):
    with pytest.raises(ConstructionError) as exc_info:
        with builder.fsm("m"):
            pass
    assert exc_info.value.diagnostic.rule is RuleId.EMPTY_FSM


def test_single_state_fsm(builder: CircuitBuilder):
    q = builder.output("q")
    with builder.fsm("hold"):
        with builder.state("only"):
            builder.assign(q, 1)
    (fsm,) = builder.build().statements
    assert fsm.state_names == ("only",)


def test_comb_assign_only_in_states(builder: CircuitBuilder):
    q = builder.output("q")
    with builder.sequential("regs"):
        with pytest.raises(ConstructionError) as exc_info:
            builder.comb_assign(q, 1)
    assert exc_info.value.diagnostic.rule is RuleId.MISPLACED_STATEMENT


def test_expression_sugar(builder: CircuitBuilder):
    a = builder.input("a", "bv8")
    assert (a + 1) == Binary(BinaryOp.ADD, Ref("a"), Lit(1))
    assert (1 - a) == Binary(BinaryOp.SUB, Lit(1), Ref("a"))
    assert (~a) == Unary(UnaryOp.NOT, Ref("a"))
    assert (a - (-3)).rhs == Unary(UnaryOp.NEG, Lit(3))
    assert a.lt(4) == Binary(BinaryOp.LT, Ref("a"), Lit(4))
    assert a[3].index == Lit(3)
    assert a["re"].name == "re"


@pytest.mark.parametrize(("value", "width"), [(0, 1), (1, 1), (2, 2), (42, 6), (255, 8), (256, 9)])
def test_literal_width(value, width):
    assert literal_width(value) == width
    assert Lit(value).type == RUInt(width)


def test_construction_is_deterministic():
    assert builtins.adder(4) == builtins.adder(4)
    assert builtins.fsm1() == builtins.fsm1()


def test_circuit_json_round_trip(fsm1: CircuitDef):
    assert CircuitDef.model_validate_json(fsm1.model_dump_json()) == fsm1


def test_declarations_keep_alias_spelling():
    circuit = builtins.cplx_mem()
    assert circuit.port("re").type == Alias("int6")
    assert circuit.wire("mem").type == Alias("cplx_ary")
