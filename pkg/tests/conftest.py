import os

os.environ["LOG_LEVEL"] = "WARNING"
os.environ.pop("SIM_SHUFFLE_SEED", None)
from pathlib import Path

import pytest

from rtlforge.application import builtins
from rtlforge.application.elaborate import ElaboratedCircuit, elaborate
from rtlforge.domain.builder import CircuitBuilder
from rtlforge.domain.ir import CircuitDef

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def uart_text() -> str:
    return (DATA_DIR / "uart.sexp").read_text(encoding="utf-8")


@pytest.fixture(scope="function")
def builder() -> CircuitBuilder:
    return CircuitBuilder("dut")


@pytest.fixture(scope="session")
def half_adder() -> CircuitDef:
    return builtins.half_adder()


@pytest.fixture(scope="session")
def full_adder() -> CircuitDef:
    return builtins.full_adder()


@pytest.fixture(scope="session")
def counter() -> CircuitDef:
    return builtins.counter()


@pytest.fixture(scope="session")
def fsm1() -> CircuitDef:
    return builtins.fsm1()


@pytest.fixture(scope="session")
def elaborated():
    """Elaborate a builtin by spec once per session."""
    cache: dict[str, ElaboratedCircuit] = {}

    def _elaborate(spec: str) -> ElaboratedCircuit:
        if spec not in cache:
            cache[spec] = elaborate(builtins.load_builtin(f"builtin:{spec}"))
        return cache[spec]

    return _elaborate


@pytest.fixture(scope="function")
def out_dir(tmp_path: Path) -> Path:
    return tmp_path / "out"
