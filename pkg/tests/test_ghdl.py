"""Analyse emitted VHDL with GHDL when it is installed."""

import shutil
import subprocess
from pathlib import Path

import pytest

from rtlforge.infrastructure.backends.vhdl import emit_vhdl
from rtlforge.infrastructure.files import write_atomic

GHDL = shutil.which("ghdl")

pytestmark = pytest.mark.skipif(GHDL is None, reason="ghdl is not installed")


@pytest.mark.parametrize("spec", ["half_adder", "adder:4", "counter", "fsm1", "cplx_mem"])
def test_ghdl_accepts_emitted_units(elaborated, spec: str, tmp_path: Path):
    files = [write_atomic(tmp_path / unit.file_name, unit.text) for unit in emit_vhdl(elaborated(spec))]
    result = subprocess.run(
        [GHDL, "-a", "--std=08", f"--workdir={tmp_path}", *map(str, files)],
        capture_output=True, text=True, cwd=tmp_path, check=False,
    )
    assert result.returncode == 0, result.stderr
