import os
import tempfile
from pathlib import Path

from rtlforge.core.logging import get_logger
from rtlforge.domain.diagnostics import RuleId, error
from rtlforge.domain.errors import InputError
from rtlforge.domain.ir import Direction

logger = get_logger(__name__)


def read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(error(RuleId.INPUT_NOT_FOUND, f"no such file: {path}")) from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(error(RuleId.INPUT_NOT_FOUND, f"cannot read {path}: {exc}")) from exc


def write_atomic(path: Path, text: str) -> Path:
    """Write through a temporary file in the target directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.info("wrote '%s'", path)
    return path


def parse_port_overrides(text: str, source: str = "ports") -> dict[str, Direction]:
    """Port sidecar lines ``input <name>`` or ``output <name>``; ``#`` starts a comment."""
    overrides: dict[str, Direction] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        match words:
            case ["input" | "output" as direction, name]:
                if overrides.get(name, direction) != direction:
                    raise InputError(error(
                        RuleId.BAD_VALUE, f"{name} is listed as both input and output", path=source, line=number,
                    ))
                overrides[name] = Direction(direction)
            case _:
                raise InputError(error(
                    RuleId.BAD_VALUE, f"expected 'input <name>' or 'output <name>', got {raw.strip()!r}",
                    path=source, line=number,
                ))
    return overrides


def read_port_overrides(path: Path) -> dict[str, Direction]:
    return parse_port_overrides(read_text(path), path.name)
