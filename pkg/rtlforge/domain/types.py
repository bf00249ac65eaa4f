"""Semantic type descriptors.

Types are frozen pydantic models discriminated by ``kind`` so that circuits
round-trip through JSON. ``RUInt`` is the natural type of integer literals and
``StateEnum`` the type of lowered FSM state registers; neither can be declared
on a port.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import Annotated, Any, Literal, Union

import regex
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

_BUILTIN_ALIAS = regex.compile(r"^(?:(bit)|(byte)|bv([1-9][0-9]*)|int([1-9][0-9]*)|uint([1-9][0-9]*))$")


class _TypeBase(BaseModel):
    model_config = ConfigDict(frozen=True)


class Bit(_TypeBase):
    kind: Literal["bit"] = "bit"


class BitVector(_TypeBase):
    kind: Literal["bv"] = "bv"
    width: PositiveInt

    def __init__(self, width: int, **data: Any) -> None:
        super().__init__(width=width, **data)


class Unsigned(_TypeBase):
    kind: Literal["uint"] = "uint"
    width: PositiveInt

    def __init__(self, width: int, **data: Any) -> None:
        super().__init__(width=width, **data)


class Signed(_TypeBase):
    kind: Literal["int"] = "int"
    width: PositiveInt

    def __init__(self, width: int, **data: Any) -> None:
        super().__init__(width=width, **data)


class RUInt(_TypeBase):
    kind: Literal["ruint"] = "ruint"
    width: PositiveInt

    def __init__(self, width: int, **data: Any) -> None:
        super().__init__(width=width, **data)


class Alias(_TypeBase):
    kind: Literal["alias"] = "alias"
    name: str = Field(min_length=1)

    def __init__(self, name: str, **data: Any) -> None:
        super().__init__(name=name, **data)


class Record(_TypeBase):
    kind: Literal["record"] = "record"
    fields: tuple[tuple[str, TypeDesc], ...] = Field(min_length=1)

    def __init__(self, fields: Any, **data: Any) -> None:
        super().__init__(fields=fields, **data)

    @field_validator("fields", mode="before")
    @classmethod
    def _accept_mapping(cls, value: Any) -> Any:
        if isinstance(value, Mapping):
            value = list(value.items())
        return tuple((name, as_type(t)) for name, t in value)

    def field_type(self, name: str) -> TypeDesc | None:
        for field_name, field_type in self.fields:
            if field_name == name:
                return field_type
        return None

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fields)


class Array(_TypeBase):
    kind: Literal["array"] = "array"
    length: PositiveInt
    element: TypeDesc

    def __init__(self, length: int, element: Any, **data: Any) -> None:
        super().__init__(length=length, element=element, **data)

    @field_validator("element", mode="before")
    @classmethod
    def _accept_alias_name(cls, value: Any) -> Any:
        return as_type(value)


class StateEnum(_TypeBase):
    kind: Literal["enum"] = "enum"
    name: str
    states: tuple[str, ...] = Field(min_length=1)

    def index(self, state: str) -> int:
        return self.states.index(state)


TypeDesc = Annotated[
    Union[Bit, BitVector, Unsigned, Signed, RUInt, Alias, Record, Array, StateEnum],
    Field(discriminator="kind"),
]

for _model in (Record, Array):
    _model.model_rebuild()

SCALAR_TYPES = (Bit, BitVector, Unsigned, Signed, RUInt)
NUMERIC_TYPES = (BitVector, Unsigned, Signed, RUInt)


def as_type(spec: Any) -> Any:
    """Normalize the shorthand accepted by declarations into a type descriptor.

    ``None`` means Bit, an int ``n`` means BitVector(n), a string names an alias.
    Anything else is handed to pydantic untouched.
    """
    if spec is None:
        return Bit()
    if isinstance(spec, bool):
        raise TypeError("a bool is not a type")
    if isinstance(spec, int):
        return BitVector(spec)
    if isinstance(spec, str):
        return Alias(spec)
    return spec


def builtin_alias(name: str) -> TypeDesc | None:
    match = _BUILTIN_ALIAS.match(name)
    if match is None:
        return None
    bit, byte, bv, signed, unsigned = match.groups()
    if bit:
        return Bit()
    if byte:
        return BitVector(8)
    if bv:
        return BitVector(int(bv))
    if signed:
        return Signed(int(signed))
    return Unsigned(int(unsigned))


def literal_width(value: int) -> int:
    if value < 0:
        raise ValueError("literals are nonnegative; use Unary(neg, Lit) for negative values")
    return 1 if value <= 1 else value.bit_length()


def type_name(t: TypeDesc) -> str:
    """Canonical short spelling, the inverse of the builtin alias table where one exists."""
    match t:
        case Bit():
            return "bit"
        case BitVector(width=w):
            return f"bv{w}"
        case Unsigned(width=w):
            return f"uint{w}"
        case Signed(width=w):
            return f"int{w}"
        case RUInt(width=w):
            return f"ruint{w}"
        case Alias(name=name):
            return name
        case Record(fields=fields):
            inner = ", ".join(f"{name}: {type_name(ft)}" for name, ft in fields)
            return f"record{{{inner}}}"
        case Array(length=length, element=element):
            return f"array[{length}] of {type_name(element)}"
        case StateEnum(name=name):
            return name
    raise TypeError(f"not a type descriptor: {t!r}")


def is_logic_bit(t: TypeDesc) -> bool:
    """Bit and one-bit vectors are interchangeable as single logic values."""
    return isinstance(t, Bit) or (isinstance(t, BitVector) and t.width == 1)
