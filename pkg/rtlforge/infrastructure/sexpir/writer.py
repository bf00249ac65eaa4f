"""Canonical Sexpir printer.

Statement forms with a body (``circuit``, blocks, ``if``/``then``/``else``,
``case``/``when``/``default``) put their header on the opening line and each
body item on its own line, indented two spaces per level. Everything else
prints on one line. Closing parentheses follow the last item.
"""

from __future__ import annotations

from .reader import Atom, ListNode, SexpNode

INDENT = "  "

# form name -> number of header items printed on the opening line
BLOCK_FORMS: dict[str, int] = {
    "circuit": 1,
    "combinatorial": 1,
    "sequential": 1,
    "if": 1,
    "then": 0,
    "else": 0,
    "case": 1,
    "when": 1,
    "default": 0,
}


def _is_block(node: SexpNode) -> bool:
    if not isinstance(node, ListNode):
        return False
    arity = BLOCK_FORMS.get(node.head or "")
    return arity is not None and len(node.children) > arity + 1


def print_sexp(node: SexpNode) -> str:
    out: list[str] = []
    # work items: a node to print (as a statement or inline), or literal text
    stack: list[tuple[SexpNode | str, int, bool]] = [(node, 0, False)]
    while stack:
        item, depth, inline = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif isinstance(item, Atom):
            out.append(item.text)
        elif inline or not _is_block(item):
            out.append("(")
            pending: list[tuple[SexpNode | str, int, bool]] = []
            for i, child in enumerate(item.children):
                if i:
                    pending.append((" ", depth, True))
                pending.append((child, depth, True))
            pending.append((")", depth, True))
            stack.extend(reversed(pending))
        else:
            arity = BLOCK_FORMS[item.head]
            header, body = item.children[: arity + 1], item.children[arity + 1:]
            pending = [("(", depth, True)]
            for i, child in enumerate(header):
                if i:
                    pending.append((" ", depth, True))
                pending.append((child, depth, True))
            for child in body:
                pending.append(("\n" + INDENT * (depth + 1), depth, True))
                pending.append((child, depth + 1, False))
            pending.append((")", depth, True))
            stack.extend(reversed(pending))
    return "".join(out) + "\n"
