from enum import StrEnum
from pathlib import Path
from typing import Annotated, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Command(StrEnum):
    CHECK = "check"
    VHDL = "vhdl"
    DOT = "dot"
    PRETTY = "pretty"
    TO_SEXP = "to-sexp"
    FROM_SEXP = "from-sexp"
    SIM = "sim"


class EmitKind(StrEnum):
    VHDL = "vhdl"
    DOT = "dot"
    PRETTY = "pretty"
    SEXP = "sexp"
    JSON = "json"


_DEFAULT_EMITS: dict[Command, tuple[EmitKind, ...]] = {
    Command.CHECK: (),
    Command.VHDL: (EmitKind.VHDL,),
    Command.DOT: (EmitKind.DOT,),
    Command.PRETTY: (EmitKind.PRETTY,),
    Command.TO_SEXP: (EmitKind.SEXP,),
    Command.FROM_SEXP: (EmitKind.VHDL,),
    Command.SIM: (),
}


class Invocation(BaseModel):
    """One run of the command-line tool."""

    model_config = ConfigDict(frozen=True, str_strip_whitespace=True, extra="forbid")

    command: Command
    input: Annotated[str, Field(min_length=1, description="builtin:<name>[:<param>], a .sexp or a .json file.")]
    output_dir: Annotated[Path | None, Field(description="Directory for emitted files; text views go to stdout without it.")] = None
    emit: tuple[EmitKind, ...] = ()
    clock: Annotated[str | None, Field(min_length=1)] = None
    reset_n: Annotated[str | None, Field(min_length=1)] = None
    sreset: Annotated[str | None, Field(min_length=1)] = None
    ports: Annotated[Path | None, Field(description="Sidecar of input/output lines consulted before port inference.")] = None
    structured: bool = False
    script: Annotated[Path | None, Field(description="Stimulus script for sim.")] = None

    @model_validator(mode="after")
    def check_command_inputs(self) -> Self:
        if self.command is Command.FROM_SEXP and not self.input.lower().endswith(".sexp"):
            raise ValueError("from-sexp reads a .sexp file")
        if self.command is Command.SIM and self.script is None:
            raise ValueError("sim needs --script")
        return self

    @property
    def emits(self) -> tuple[EmitKind, ...]:
        """Requested outputs, falling back to what the command produces by default."""
        requested = self.emit or _DEFAULT_EMITS[self.command]
        return tuple(dict.fromkeys(requested))
