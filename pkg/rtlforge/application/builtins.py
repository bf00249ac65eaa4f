"""Example circuits compiled into the tool, addressable as ``builtin:<name>[:<param>]``."""

from collections.abc import Callable

from rtlforge.domain.builder import CircuitBuilder
from rtlforge.domain.diagnostics import RuleId, error
from rtlforge.domain.errors import InputError
from rtlforge.domain.ir import CircuitDef
from rtlforge.domain.types import Array, Record

BUILTIN_PREFIX = "builtin:"


def half_adder() -> CircuitDef:
    b = CircuitBuilder("half_adder")
    a, bb = b.inputs("a", "b")
    sum_, cout = b.outputs("sum", "cout")
    b.assign(sum_, a ^ bb)
    b.assign(cout, a & bb)
    return b.build()


def full_adder() -> CircuitDef:
    b = CircuitBuilder("full_adder")
    a, bb, cin = b.inputs("a", "b", "cin")
    sum_, cout = b.outputs("sum", "cout")
    ha1 = b.component("ha1", half_adder)
    ha2 = b.component("ha2", half_adder())
    b.assign(ha1.port("a"), a)
    b.assign(ha1.port("b"), bb)
    b.assign(ha2.port("a"), cin)
    b.assign(ha2.port("b"), ha1.port("sum"))
    b.assign(sum_, ha2.port("sum"))
    b.assign(cout, ha1.port("cout") | ha2.port("cout"))
    return b.build()


def adder(nbits: int = 8) -> CircuitDef:
    """Ripple-carry adder of ``nbits`` full adders; ``cout`` is the last carry."""
    if nbits < 1:
        raise ValueError("an adder needs at least one bit")
    b = CircuitBuilder("adder")
    a = b.input("a", nbits)
    bb = b.input("b", nbits)
    sum_ = b.output("sum", nbits)
    cout = b.output("cout")

    fa = full_adder()
    adders = [b.component(f"fa_{i}", fa) for i in range(nbits)]
    for i, stage in enumerate(adders):
        b.assign(stage.port("a"), a[i])
        b.assign(stage.port("b"), bb[i])
        if i == 0:
            b.assign(stage.port("cin"), 0)
        else:
            b.assign(stage.port("cin"), adders[i - 1].port("cout"))
        b.assign(sum_[i], stage.port("sum"))
    b.assign(cout, adders[-1].port("cout"))
    return b.build()


def counter() -> CircuitDef:
    b = CircuitBuilder("counter")
    tick = b.input("tick")
    count = b.output("count", "byte")
    with b.sequential("counting"):
        with b.if_(tick.eq(1)):
            with b.if_(count.eq(255)):
                b.assign(count, 0)
            with b.else_():
                b.assign(count, count + 1)
    return b.build()


def fsm1() -> CircuitDef:
    b = CircuitBuilder("fsm1")
    go = b.input("go")
    f = b.output("f", "bv2")
    with b.fsm("simple"):
        b.assign(f, 0)
        with b.state("s0"):
            b.assign(f, 1)
            with b.if_(go.eq(1)):
                b.next_state("s1")
        with b.state("s1"):
            b.assign(f, 2)
            b.next_state("s2")
        with b.state("s2"):
            b.assign(f, 3)
            b.next_state("s0")
    return b.build()


def cplx_mem() -> CircuitDef:
    """A constant table of 256 complex numbers read through an address port.

    Entries are ``{re: i % 32, im: 2i % 32}`` so they fit the int6 fields.
    """
    b = CircuitBuilder("cplx_mem")
    b.typedef("cplx", Record({"re": "int6", "im": "int6"}))
    b.typedef("cplx_ary", Array(256, "cplx"))
    addr = b.input("addr", "uint8")
    re = b.output("re", "int6")
    im = b.output("im", "int6")
    mem = b.wire("mem", "cplx_ary")
    for i in range(256):
        b.assign(mem[i], {"re": i % 32, "im": (2 * i) % 32})
    b.assign(re, mem[addr]["re"])
    b.assign(im, mem[addr]["im"])
    return b.build()


BUILTINS: dict[str, Callable[..., CircuitDef]] = {
    "half_adder": half_adder,
    "full_adder": full_adder,
    "adder": adder,
    "counter": counter,
    "fsm1": fsm1,
    "cplx_mem": cplx_mem,
}


def load_builtin(spec: str) -> CircuitDef:
    """Resolve ``builtin:<name>[:<param>]``; only the adder takes a parameter (its width)."""
    body = spec.removeprefix(BUILTIN_PREFIX)
    name, _, param = body.partition(":")
    factory = BUILTINS.get(name)
    if factory is None:
        known = ", ".join(sorted(BUILTINS))
        raise InputError(error(RuleId.INPUT_NOT_FOUND, f"unknown builtin {name!r} (known: {known})"))
    if not param:
        return factory()
    if factory is not adder or not param.isdigit() or int(param) < 1:
        raise InputError(error(RuleId.BAD_VALUE, f"builtin {name} does not take parameter {param!r}"))
    return factory(int(param))


def is_builtin(spec: str) -> bool:
    return spec.startswith(BUILTIN_PREFIX)
