import pytest

from rtlforge.application import builtins
from rtlforge.application.elaborate import elaborate
from rtlforge.core.settings import VhdlSettings
from rtlforge.domain.builder import CircuitBuilder
from rtlforge.domain.diagnostics import RuleId
from rtlforge.domain.errors import EmissionError
from rtlforge.infrastructure.backends.dot import emit_dot
from rtlforge.infrastructure.backends.pretty import pretty
from rtlforge.infrastructure.backends.vhdl import HEADER, UnitKind, emit_support_package, emit_vhdl, vhdl_identifier
from rtlforge.infrastructure.sexpir.lowering import emit_sexpir

COUNTER_PRETTY = """\
circuit counter
  input tick : bit
  output count : byte
  sequential counting
    if (tick == 1)
      if (count == 255)
        count <= 0
      else
        count <= (count + 1)
"""


def units_of(elab, settings=None) -> dict[str, str]:
    return {unit.file_name: unit.text for unit in emit_vhdl(elab, settings)}


@pytest.mark.parametrize(
    ("name", "expected"),
    [
        ("count", "count"),
        ("Rx_Data", "rx_data"),
        ("signal", "\\signal\\"),
        ("unsigned", "\\unsigned\\"),
        ("a__b", "\\a__b\\"),
        ("_x", "\\_x\\"),
        ("x_", "\\x_\\"),
    ],
)
def test_vhdl_identifier(name, expected):
    assert vhdl_identifier(name) == expected


def test_fsm_entity(elaborated):
    units = units_of(elaborated("fsm1"))
    assert list(units) == ["rtlforge_support.vhd", "fsm1_c.vhd"]
    text = units["fsm1_c.vhd"]
    for anchor in [
        f"-- {HEADER}",
        "use work.rtlforge_support.all;",
        "entity fsm1_c is",
        "clk : in std_logic;",
        "reset_n : in std_logic;",
        "sreset : in std_logic;",
        "go : in std_logic;",
        "f : out std_logic_vector(1 downto 0)",
        "type simple_state_t is (s0,s1,s2);",
        "signal simple_state : simple_state_t;",
        "simple_update : process(reset_n,clk)",
        "if reset_n='0' then",
        "elsif rising_edge(clk) then",
        "if sreset='1' then",
        "f <= (others=>'0');",
        "simple_state <= s0;",
        "f <= to_bv(0,2);",
        "case simple_state is",
        "when s0 =>",
        "f <= to_bv(1,2);",
        "if (to_uint(go,1) = 1) then",
        "simple_state <= s1;",
        "when others => null;",
        "end process simple_update;",
        "end architecture rtl;",
    ]:
        assert anchor in text, anchor


def test_counter_reads_its_output_through_a_shadow(elaborated):
    text = units_of(elaborated("counter"))["counter_c.vhd"]
    assert "signal count_s : std_logic_vector(7 downto 0);" in text
    assert "count <= count_s;" in text
    assert "if (to_uint(tick,1) = 1) then" in text
    assert "if (unsigned(count_s) = 255) then" in text
    assert "count_s <= to_bv(0,8);" in text
    assert "count_s <= std_logic_vector((unsigned(count_s) + to_unsigned(1,8)));" in text
    assert "count_s <= (others=>'0');" in text


def test_adder_instances(elaborated):
    units = units_of(elaborated("adder:4"))
    assert list(units) == ["rtlforge_support.vhd", "half_adder_c.vhd", "full_adder_c.vhd", "adder_c.vhd"]
    text = units["adder_c.vhd"]
    assert "fa_0 : entity work.full_adder_c" in text
    assert "cin => fa_0_cin" in text
    assert "fa_0_cin <= '0';" in text
    assert "fa_1_cin <= fa_0_cout;" in text
    assert "fa_0_a <= a(0);" in text
    assert "sum(0) <= fa_0_sum;" in text
    assert "cout <= fa_3_cout;" in text
    # no registers anywhere, so no clock ports
    assert "clk" not in text
    half = units["half_adder_c.vhd"]
    assert "sum <= (a xor b);" in half
    assert "cout <= (a and b);" in half


def test_records_and_arrays_get_a_types_package(elaborated):
    units = units_of(elaborated("cplx_mem"))
    assert list(units) == ["rtlforge_support.vhd", "cplx_mem_pkg.vhd", "cplx_mem_c.vhd"]
    package = units["cplx_mem_pkg.vhd"]
    assert "type cplx_t is record" in package
    assert "re : signed(5 downto 0);" in package
    assert "type cplx_ary_t is array (0 to 255) of cplx_t;" in package
    assert package.index("type cplx_t") < package.index("type cplx_ary_t")

    entity = units["cplx_mem_c.vhd"]
    assert "use work.cplx_mem_pkg.all;" in entity
    assert "signal mem : cplx_ary_t;" in entity
    assert "mem(13) <= (re=>to_signed(13,6), im=>to_signed(26,6));" in entity
    assert "re <= mem(to_integer(addr)).re;" in entity


def test_settings_rename_clock_and_suffix(elaborated):
    settings = VhdlSettings(clock_name="sys_clk", entity_suffix="_rtl", support_package="helpers")
    units = units_of(elaborated("counter"), settings)
    assert list(units) == ["helpers.vhd", "counter_rtl.vhd"]
    text = units["counter_rtl.vhd"]
    assert "counting : process(reset_n,sys_clk)" in text
    assert "use work.helpers.all;" in text


def test_support_package():
    unit = emit_support_package()
    assert unit.kind is UnitKind.SUPPORT_PACKAGE
    assert "package rtlforge_support is" in unit.text
    assert "function to_bv(value : integer; width : natural) return std_logic_vector;" in unit.text
    assert "function to_uint(value : std_logic; width : natural) return unsigned;" in unit.text


def test_names_that_fold_together_collide():
    b = CircuitBuilder("clash")
    a = b.input("a")
    b.assign(b.output("Q"), a)
    b.assign(b.output("q"), a)
    with pytest.raises(EmissionError) as exc_info:
        emit_vhdl(elaborate(b.build()))
    assert exc_info.value.diagnostic.rule is RuleId.NAME_COLLISION


def test_reserved_port_names_are_escaped():
    b = CircuitBuilder("escapes")
    src = b.input("in")
    b.assign(b.output("out"), src)
    text = units_of(elaborate(b.build()))["escapes_c.vhd"]
    assert "\\out\\ <= \\in\\;" in text


def test_combinational_process_sensitivity(builder: CircuitBuilder):
    sel = builder.input("sel", "bv2")
    a, c = builder.inputs("a", "c")
    q = builder.output("q")
    with builder.combinatorial("mux"):
        with builder.case(sel):
            with builder.when(0):
                builder.assign(q, a)
            with builder.default():
                builder.assign(q, c)
    text = units_of(elaborate(builder.build()))["dut_c.vhd"]
    assert "mux : process(sel,a,c)" in text
    assert 'when "00" =>' in text
    assert "when others =>" in text


def test_dot_of_half_adder(elaborated):
    text = emit_dot(elaborated("half_adder"))
    lines = text.splitlines()
    assert lines[0] == 'digraph "half_adder" {'
    assert sum("[label=" in line for line in lines) == 15
    assert sum("->" in line for line in lines) == 14
    assert sum('label="assign"' in line for line in lines) == 2
    assert 'n0 [label="circuit half_adder"];' in text
    assert 'n1 [label="input a : bit"];' in text


def test_dot_keeps_fsms(elaborated):
    text = emit_dot(elaborated("fsm1"))
    assert 'label="fsm simple"' in text
    assert 'label="next_state s1"' in text


def test_pretty_counter(elaborated):
    assert pretty(elaborated("counter")) == COUNTER_PRETTY


def test_pretty_fsm(elaborated):
    lines = pretty(elaborated("fsm1")).splitlines()
    assert "  fsm simple" in lines
    assert "    state s0" in lines
    assert "        next_state s1" in lines


BUILTIN_SPECS = ["half_adder", "full_adder", "adder:8", "counter", "fsm1", "cplx_mem"]


def fresh(spec: str):
    return elaborate(builtins.load_builtin(f"builtin:{spec}"))


def all_views(elab) -> dict[str, str]:
    views = {**units_of(elab), "dot": emit_dot(elab), "pretty": pretty(elab)}
    if not elab.source.typedefs:
        views["sexp"] = emit_sexpir(elab)
    return views


def fingerprint(elab) -> tuple:
    return (
        elab.source.model_dump_json(),
        [s.model_dump_json() for s in elab.statements],
        {path: plan.model_dump_json() for path, plan in elab.plans.items()},
        sorted(elab.graph.graph.edges(data=True)),
        dict(elab.drivers),
        elab.symbols.model_dump_json(),
    )


@pytest.mark.parametrize("spec", BUILTIN_SPECS)
def test_emission_is_byte_identical(spec: str):
    assert all_views(fresh(spec)) == all_views(fresh(spec))


@pytest.mark.parametrize("spec", BUILTIN_SPECS)
def test_backends_leave_the_circuit_alone(spec: str):
    elab = fresh(spec)
    before = fingerprint(elab)
    all_views(elab)
    assert fingerprint(elab) == before
