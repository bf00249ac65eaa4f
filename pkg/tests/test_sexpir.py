import random
from collections import Counter
from pathlib import Path

import pytest

from rtlforge.application.elaborate import elaborate
from rtlforge.application.pipeline import SexpirLoader
from rtlforge.application.simulator import init
from rtlforge.domain.diagnostics import RuleId
from rtlforge.domain.errors import SexpirError
from rtlforge.domain.ir import Combinatorial, Direction, Sequential
from rtlforge.domain.types import Alias, BitVector, Signed
from rtlforge.domain.typesys import width_of
from rtlforge.infrastructure.sexpir.lowering import component_circuits, emit_sexpir, emit_sexpir_files, lower_to_ir, validate
from rtlforge.infrastructure.sexpir.reader import Atom, ListNode, parse, sexp
from rtlforge.infrastructure.sexpir.writer import print_sexp

COUNTER_SEXP = """\
(circuit counter
  (input (name tick) (type bit))
  (output (name count) (type bv8))
  (sequential counting
    (if (== tick 1)
      (then
        (if (== count 255)
          (then
            (assign count 0))
          (else
            (assign count (+ count 1))))))))
"""


def test_parse_builds_nested_lists():
    root = parse("(assign (index rx_data 3) rx) ;; trailing comment")
    assert root == sexp("assign", sexp("index", "rx_data", 3), "rx")
    assert root.head == "assign"
    assert root.args[0].args[1].value == 3


def test_deep_nesting_parses():
    root = parse("(a " * 1000 + ")" * 1000)
    depth, node = 1, root
    while node.args:
        (node,) = node.args
        depth += 1
    assert depth == 1000
    assert node == sexp("a")


def test_megabyte_file_parses():
    count = 35_000
    text = "(circuit big\n" + "".join(f"  (signal (name s{i}) (type bit))\n" for i in range(count)) + ")\n"
    assert len(text.encode()) > 1_000_000
    root = parse(text)
    assert len(root.args) == count + 1
    assert root.args[-1] == sexp("signal", sexp("name", f"s{count - 1}"), sexp("type", "bit"))
    assert root.args[-1].line == count + 1


def test_parse_records_positions():
    root = parse("(circuit c\n  (signal (name a) (type bit)))")
    signal = root.args[1]
    assert (signal.line, signal.column) == (2, 3)


def test_unbalanced_file(data_dir):
    with pytest.raises(SexpirError) as exc_info:
        parse((data_dir / "unbalanced.sexp").read_text(encoding="utf-8"))
    diagnostic = exc_info.value.diagnostic
    assert diagnostic.rule is RuleId.UNBALANCED_PARENS
    assert (diagnostic.line, diagnostic.column) == (4, 3)


@pytest.mark.parametrize(
    ("text", "rule", "where"),
    [
        ("(a))", RuleId.STRAY_TOKEN, (1, 4)),
        ("(a) (b)", RuleId.STRAY_TOKEN, (1, 5)),
        (")", RuleId.UNBALANCED_PARENS, (1, 1)),
        ("", RuleId.EMPTY_INPUT, (1, 1)),
        (";; nothing but a comment\n", RuleId.EMPTY_INPUT, (1, 1)),
        ('(circuit x\n  (assign y "z"))', RuleId.PARSE_ERROR, (2, 13)),
    ],
)
def test_parse_errors(text, rule, where):
    with pytest.raises(SexpirError) as exc_info:
        parse(text)
    diagnostic = exc_info.value.diagnostic
    assert diagnostic.rule is rule
    assert (diagnostic.line, diagnostic.column) == where


def test_validate_collects_every_problem():
    root = parse(
        "(circuit c\n"
        "  (signal (name 1x) (bits_sign 0))\n"
        "  (if 1 (then))\n"
        "  (sequential s (sequential t))\n"
        "  (frobnicate))"
    )
    found = validate(root)
    assert {d.rule for d in found} == {
        RuleId.BAD_IDENTIFIER,
        RuleId.BAD_WIDTH,
        RuleId.MISPLACED_STATEMENT,
        RuleId.NESTED_BLOCK,
        RuleId.UNKNOWN_FORM,
    }
    assert all(d.line is not None for d in found)


@pytest.mark.parametrize(
    "text",
    [
        "(circuit c (assign 3 a))",
        "(circuit c (assign (+ a b) a))",
        "(circuit c (signal (name a)))",
        "(circuit c (sequential nil (case a (default) (when 1))))",
        "(circuit c (sequential nil (if a (else))))",
        "(module c)",
    ],
)
def test_validate_rejects(text):
    assert validate(parse(text))


def test_lower_uart(uart_text):
    circuit = lower_to_ir(parse(uart_text))
    assert circuit.name == "uart"
    assert circuit.ports == ()
    assert len(circuit.wires) == 11
    assert circuit.wire("rx").type == Alias("bv1")
    assert circuit.wire("rx_data").type == BitVector(8)
    strobe, comb, seq = circuit.statements
    assert isinstance(comb, Combinatorial)
    assert comb.label is None
    assert isinstance(seq, Sequential)
    assert seq.label.startswith("sequential_")


def test_declaration_forms():
    circuit = lower_to_ir(parse(
        "(circuit c\n"
        "  (input (name a) (type bit))\n"
        "  (input (name s) (bits_sign (4 signed)))\n"
        "  (output (name q) (bits_sign 4))\n"
        "  (assign q (+ s 1)))"
    ))
    assert circuit.port("a").type == Alias("bit")
    assert circuit.port("s").type == Signed(4)
    assert circuit.port("q").direction is Direction.OUTPUT


def test_lowering_errors_carry_positions():
    with pytest.raises(SexpirError) as exc_info:
        lower_to_ir(parse("(circuit c\n  (signal (name a) (type bit))\n  (signal (name a) (type bit)))"))
    diagnostic = exc_info.value.diagnostic
    assert diagnostic.rule is RuleId.DUPLICATE_NAME
    assert diagnostic.line == 3


def test_components_need_their_circuits(data_dir):
    root = parse((data_dir / "ha_pair.sexp").read_text(encoding="utf-8"))
    assert component_circuits(root) == ["half_adder"]
    with pytest.raises(SexpirError) as exc_info:
        lower_to_ir(root)
    assert exc_info.value.diagnostic.rule is RuleId.UNRESOLVED_COMPONENT


def test_loader_resolves_components(data_dir):
    loader = SexpirLoader(data_dir)
    circuit = loader.load(data_dir / "ha_pair.sexp")
    assert [i.name for i in circuit.instances] == ["first", "second"]
    assert loader.partitions["half_adder"].inputs == ("a", "b")
    assert loader.partitions["half_adder"].outputs == ("sum", "cout")

    sim = init(elaborate(circuit))
    for x, y, z in [(0, 0, 0), (1, 1, 0), (1, 1, 1), (0, 1, 1)]:
        sim.poke("x", x)
        sim.poke("y", y)
        sim.poke("z", z)
        assert sim.peek("s") + 2 * sim.peek("c") == x + y + z


def test_printer_is_canonical(uart_text):
    once = print_sexp(parse(uart_text))
    assert parse(once) == parse(uart_text)
    assert print_sexp(parse(once)) == once


def random_tree(rng: random.Random, depth: int) -> ListNode:
    heads = ("circuit", "sequential", "if", "then", "else", "case", "when", "assign", "+", "index")
    atoms = ("a", "b_1", "nil", "0", "42", "-3", "==")
    children = [Atom(rng.choice(heads))]
    for _ in range(rng.randrange(0, 5)):
        if depth and rng.random() < 0.4:
            children.append(random_tree(rng, depth - 1))
        else:
            children.append(Atom(rng.choice(atoms)))
    return ListNode(tuple(children))


@pytest.mark.parametrize("seed", range(100))
def test_random_trees_survive_printing(seed):
    tree = random_tree(random.Random(seed), 4)
    assert parse(print_sexp(tree)) == tree


def test_emit_counter(elaborated):
    assert emit_sexpir(elaborated("counter")) == COUNTER_SEXP


def test_emitted_fsm_behaves_the_same(elaborated):
    elab = elaborated("fsm1")
    text = emit_sexpir(elab)
    assert "(signal (name simple_state) (bits_sign 2))" in text
    assert "(assign simple_state 1)" in text
    again = elaborate(lower_to_ir(parse(text)))

    original, copy = init(elab), init(again)
    for go in (1, 0, 1, 1, 0, 0, 1, 1, 1, 1):
        original.poke("go", go)
        copy.poke("go", go)
        original.step()
        copy.step()
        assert copy.peek("f") == original.peek("f")
        assert copy.peek("simple_state") == original.peek("simple_state")


def test_emit_files_children_first(elaborated):
    files = emit_sexpir_files(elaborated("adder:2"))
    assert list(files) == ["half_adder.sexp", "full_adder.sexp", "adder.sexp"]
    assert "(component (name fa_1) (circuit full_adder))" in files["adder.sexp"]


def test_typedefs_have_no_sexpir_form(elaborated):
    with pytest.raises(SexpirError) as exc_info:
        emit_sexpir(elaborated("cplx_mem"))
    assert exc_info.value.diagnostic.rule is RuleId.UNSUPPORTED


def reload(elab, directory: Path):
    files = emit_sexpir_files(elab)
    for name, text in files.items():
        (directory / name).write_text(text, encoding="utf-8")
    return elaborate(SexpirLoader(directory).load(directory / f"{elab.name}.sexp"))


@pytest.mark.parametrize("spec", ["half_adder", "full_adder", "adder:3", "counter", "fsm1"])
def test_builtins_survive_a_sexpir_round_trip(elaborated, spec: str, tmp_path: Path):
    elab = elaborated(spec)
    again = reload(elab, tmp_path)

    assert {k: width_of(t) for k, t in again.symbols.signals.items()} == {
        k: width_of(t) for k, t in elab.symbols.signals.items()
    }
    assert Counter(type(s).__name__ for s in again.statements) == Counter(type(s).__name__ for s in elab.statements)

    original, copy = init(elab), init(again)
    rng = random.Random(11)
    for _ in range(16):
        for port in elab.source.inputs:
            value = rng.randrange(1 << original.width(port.name))
            original.poke(port.name, value)
            copy.poke(port.name, value)
        original.step()
        copy.step()
        for port in elab.source.outputs:
            assert copy.peek(port.name) == original.peek(port.name), port.name
