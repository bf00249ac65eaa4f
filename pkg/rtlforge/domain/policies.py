"""Structural well-formedness rules.

Each check returns a ``Diagnostic`` or ``None``. The builder raises on the
first one it gets, elaboration collects them all.
"""

from collections.abc import Collection, Iterable

import regex

from .diagnostics import Diagnostic, RuleId, error
from .ir import BLOCK_TYPES, Assign, Expr, Fsm, NextState, PortRef, Stmt, target_root, walk
from .types import Array, Record, RUInt, StateEnum, TypeDesc, literal_width

IDENTIFIER = regex.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def check_identifier(name: str, what: str = "name") -> Diagnostic | None:
    if not isinstance(name, str) or not IDENTIFIER.match(name):
        return error(RuleId.BAD_IDENTIFIER, f"{what} {name!r} is not an identifier")
    return None


def check_unique(name: str, taken: Collection[str], what: str) -> Diagnostic | None:
    if name in taken:
        return error(RuleId.DUPLICATE_NAME, f"{what} {name!r} is already declared")
    return None


def check_declarable(t: TypeDesc, allow_state: bool = False) -> Diagnostic | None:
    """Literal types never appear in declarations; state enums only on lowered state registers."""
    stack = [t]
    while stack:
        current = stack.pop()
        if isinstance(current, RUInt):
            return error(RuleId.LITERAL_ONLY_TYPE, "ruint is the type of literals and cannot be declared")
        if isinstance(current, StateEnum) and not allow_state:
            return error(RuleId.LITERAL_ONLY_TYPE, f"state type {current.name} is reserved for FSM state registers")
        if isinstance(current, Record):
            stack.extend(ft for _, ft in current.fields)
        elif isinstance(current, Array):
            stack.append(current.element)
    return None


def check_target(lhs: Expr, inputs: Collection[str], child_outputs: Collection[str]) -> Diagnostic | None:
    root = target_root(lhs)
    if root is None:
        return error(RuleId.ILLEGAL_TARGET, "assign target must be a signal, an instance port, or an index/field of one")
    if isinstance(root, PortRef):
        if root.key in child_outputs:
            return error(RuleId.ILLEGAL_TARGET, f"{root.key} is an output of instance {root.instance}")
        return None
    if root.name in inputs:
        return error(RuleId.ILLEGAL_TARGET, f"{root.name} is an input and cannot be driven")
    return None


def check_choices(values: Iterable[int | str], selector_width: int | None = None) -> Diagnostic | None:
    seen: set[int | str] = set()
    for value in values:
        if value in seen:
            return error(RuleId.DUPLICATE_CHOICE, f"case choice {value} appears twice")
        seen.add(value)
        if isinstance(value, int) and selector_width is not None:
            if value < 0 or literal_width(value) > selector_width:
                return error(
                    RuleId.CHOICE_WIDTH,
                    f"case choice {value} does not fit a {selector_width}-bit selector",
                )
    return None


def check_block_body(stmt: Stmt) -> Diagnostic | None:
    """Blocks hold only assigns, ifs and cases; next_state belongs to FSM states."""
    if isinstance(stmt, Fsm):
        for default in stmt.defaults:
            if not isinstance(default, Assign):
                return error(RuleId.MISPLACED_STATEMENT, f"fsm {stmt.label} defaults must be assigns")
        body: list[Stmt] = [s for state in stmt.states for s in state.body]
    else:
        body = list(getattr(stmt, "body", ()))
    for _, inner in walk(body):
        if isinstance(inner, BLOCK_TYPES):
            return error(RuleId.NESTED_BLOCK, f"{type(inner).__name__.lower()} block nested inside another block")
        if isinstance(inner, NextState) and not isinstance(stmt, Fsm):
            return error(RuleId.MISPLACED_STATEMENT, "next_state outside an FSM state")
    return None


def check_top_level(stmt: Stmt) -> Diagnostic | None:
    """Only assigns and blocks sit at circuit level."""
    if isinstance(stmt, NextState):
        return error(RuleId.MISPLACED_STATEMENT, "next_state outside an FSM state")
    if not isinstance(stmt, (Assign, *BLOCK_TYPES)):
        return error(RuleId.MISPLACED_STATEMENT, f"{type(stmt).__name__.lower()} must sit inside a block")
    return None


def check_fsm(fsm: Fsm) -> Diagnostic | None:
    if not fsm.states:
        return error(RuleId.EMPTY_FSM, f"fsm {fsm.label} declares no state")
    names = fsm.state_names
    for name in names:
        if names.count(name) > 1:
            return error(RuleId.DUPLICATE_NAME, f"state {name!r} is declared twice in fsm {fsm.label}")
    for state in fsm.states:
        for _, inner in walk(state.body):
            if isinstance(inner, NextState) and inner.target not in names:
                return error(RuleId.UNKNOWN_STATE, f"next_state {inner.target} is not a state of fsm {fsm.label}")
    return None
