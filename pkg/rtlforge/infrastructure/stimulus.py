"""Stimulus scripts for the ``sim`` command.

One command per line, ``#`` starts a comment::

    poke go 1
    step 3
    expect f 1
"""

from typing import Annotated, Literal, Union

import regex
from pydantic import BaseModel, ConfigDict, Field

from rtlforge.domain.diagnostics import RuleId, error
from rtlforge.domain.errors import InputError

_INTEGER = regex.compile(r"^-?(?:0x[0-9a-fA-F]+|0b[01]+|[0-9]+)$")


class _Command(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int


class Poke(_Command):
    op: Literal["poke"] = "poke"
    name: str
    value: int


class Step(_Command):
    op: Literal["step"] = "step"
    cycles: int = Field(default=1, ge=0)


class Expect(_Command):
    op: Literal["expect"] = "expect"
    name: str
    value: int


Command = Annotated[Union[Poke, Step, Expect], Field(discriminator="op")]


def _integer(token: str, line: int) -> int:
    if not _INTEGER.match(token):
        raise InputError(error(RuleId.BAD_SCRIPT, f"{token!r} is not an integer", path="script", line=line))
    # plain digits are decimal even with leading zeros
    return int(token, 0 if token.lstrip("-")[:2] in ("0x", "0b") else 10)


def parse_script(text: str) -> list[Command]:
    commands: list[Command] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        match words:
            case ["poke", name, value]:
                commands.append(Poke(line=number, name=name, value=_integer(value, number)))
            case ["step"]:
                commands.append(Step(line=number))
            case ["step", cycles]:
                count = _integer(cycles, number)
                if count < 0:
                    raise InputError(error(RuleId.BAD_SCRIPT, "step count must not be negative", path="script", line=number))
                commands.append(Step(line=number, cycles=count))
            case ["expect", name, value]:
                commands.append(Expect(line=number, name=name, value=_integer(value, number)))
            case _:
                raise InputError(error(RuleId.BAD_SCRIPT, f"cannot read {raw.strip()!r}", path="script", line=number))
    return commands
