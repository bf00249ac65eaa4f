#!/usr/bin/env python3

import argparse
import sys
from argparse import Namespace

from pydantic import ValidationError

from rtlforge.cli.commands import run
from rtlforge.cli.error_handlers import EXIT_INPUT
from rtlforge.cli.schemas import Command, EmitKind, Invocation
from rtlforge.core.logging import set_console_level

_HELP = {
    Command.CHECK: "Elaborate a circuit and print its diagnostics",
    Command.VHDL: "Emit VHDL for a circuit",
    Command.DOT: "Emit the Graphviz view of a circuit",
    Command.PRETTY: "Print a circuit in readable form",
    Command.TO_SEXP: "Emit Sexpir for a builtin or a circuit description file",
    Command.FROM_SEXP: "Read a Sexpir file and emit (VHDL by default)",
    Command.SIM: "Run a stimulus script against the cycle simulator",
}


def parse_args(argv: list[str] | None = None) -> Namespace:
    parser = argparse.ArgumentParser(description="RTL construction and interchange tool")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log pipeline steps to stderr")

    subparsers = parser.add_subparsers(dest="command", help="Commands", required=True)
    for command, help_text in _HELP.items():
        sub = subparsers.add_parser(command.value, help=help_text)
        sub.add_argument("input", help="builtin:<name>[:<param>], a .sexp file or a .json circuit description")
        sub.add_argument("-o", "--output-dir", help="Directory for emitted files")
        sub.add_argument(
            "--emit", action="append", choices=[k.value for k in EmitKind], default=[],
            help="Artifact to produce (repeatable)",
        )
        sub.add_argument("--clock", help="Clock port name")
        sub.add_argument("--reset-n", help="Active-low asynchronous reset port name")
        sub.add_argument("--sreset", help="Active-high synchronous reset port name")
        sub.add_argument("--ports", help="File of input/output <name> lines overriding port inference")
        sub.add_argument("--structured", action="store_true", help="Print diagnostics as JSON lines")
        if command is Command.SIM:
            sub.add_argument("--script", required=True, help="Stimulus script (poke/step/expect)")

    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    if args.verbose:
        set_console_level("INFO")
    try:
        invocation = Invocation(
            command=args.command,
            input=args.input,
            output_dir=args.output_dir,
            emit=tuple(args.emit),
            clock=args.clock,
            reset_n=args.reset_n,
            sreset=args.sreset,
            ports=args.ports,
            structured=args.structured,
            script=getattr(args, "script", None),
        )
    except ValidationError as exc:
        for problem in exc.errors():
            print(f"error: {problem['msg']}", file=sys.stderr)
        return EXIT_INPUT
    return run(invocation)


if __name__ == "__main__":
    sys.exit(main())
