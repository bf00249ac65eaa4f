"""Sexpir tokenizer and parser.

The parser is iterative (an explicit stack of open lists), so input size and
nesting depth are bounded by memory only.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field

import regex

from rtlforge.core.logging import get_logger
from rtlforge.domain.diagnostics import RuleId, error
from rtlforge.domain.errors import SexpirError

logger = get_logger(__name__)

_TOKEN = regex.compile(
    r"(?P<space>\s+)"
    r"|(?P<comment>;;[^\n]*)"
    r"|(?P<open>\()"
    r"|(?P<close>\))"
    r"|(?P<atom>[^\s()\[\];\"]+)"
    r"|(?P<bad>.)",
    regex.DOTALL,
)
_INTEGER = regex.compile(r"^-?[0-9]+$")
_IDENTIFIER = regex.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True, slots=True)
class Atom:
    text: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def is_int(self) -> bool:
        return _INTEGER.match(self.text) is not None

    @property
    def is_identifier(self) -> bool:
        return _IDENTIFIER.match(self.text) is not None

    @property
    def value(self) -> int:
        return int(self.text)


@dataclass(frozen=True, slots=True)
class ListNode:
    children: tuple[SexpNode, ...] = ()
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def head(self) -> str | None:
        """Text of the leading atom, the form name."""
        if self.children and isinstance(self.children[0], Atom):
            return self.children[0].text
        return None

    @property
    def args(self) -> tuple[SexpNode, ...]:
        return self.children[1:]

    def __len__(self) -> int:
        return len(self.children)


SexpNode = Atom | ListNode


def sexp(*items: SexpNode | str | int) -> ListNode:
    """Build a list node from nodes, strings and ints."""
    return ListNode(tuple(i if isinstance(i, (Atom, ListNode)) else Atom(str(i)) for i in items))


def _tokens(text: str) -> Iterator[tuple[str, str, int, int]]:
    line, line_start = 1, 0
    for match in _TOKEN.finditer(text):
        kind = match.lastgroup
        start = match.start()
        if kind == "space":
            newlines = match.group().count("\n")
            if newlines:
                line += newlines
                line_start = match.start() + match.group().rindex("\n") + 1
            continue
        if kind == "comment":
            continue
        yield kind, match.group(), line, start - line_start + 1


def _fail(rule: RuleId, message: str, line: int, column: int) -> SexpirError:
    return SexpirError(error(rule, message, line=line, column=column))


def parse(text: str) -> SexpNode:
    """Parse exactly one form; raises ``SexpirError`` with line and column on failure."""
    stack: list[tuple[list[SexpNode], int, int]] = []
    result: SexpNode | None = None
    for kind, token, line, column in _tokens(text):
        if result is not None:
            raise _fail(RuleId.STRAY_TOKEN, f"unexpected {token!r} after the end of the form", line, column)
        match kind:
            case "open":
                stack.append(([], line, column))
            case "close":
                if not stack:
                    raise _fail(RuleId.UNBALANCED_PARENS, "unmatched ')'", line, column)
                children, open_line, open_column = stack.pop()
                node = ListNode(tuple(children), open_line, open_column)
                if stack:
                    stack[-1][0].append(node)
                else:
                    result = node
            case "atom":
                atom = Atom(token, line, column)
                if stack:
                    stack[-1][0].append(atom)
                else:
                    result = atom
            case _:
                raise _fail(RuleId.PARSE_ERROR, f"illegal character {token!r}", line, column)
    if stack:
        _, open_line, open_column = stack[-1]
        raise _fail(RuleId.UNBALANCED_PARENS, f"{len(stack)} unclosed '('", open_line, open_column)
    if result is None:
        raise SexpirError(error(RuleId.EMPTY_INPUT, "no form found", line=1, column=1))
    logger.debug("parsed %d characters", len(text))
    return result
