import logging
import sys

from .settings import get_settings

_FORMAT = "[%(asctime)s] | %(levelname)-7s | %(name)s %(funcName)s() | %(message)s"
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
_ROOT = "rtlforge"


def _root_logger() -> logging.Logger:
    settings = get_settings()
    root = logging.getLogger(_ROOT)
    if root.handlers:
        return root

    root.setLevel(getattr(logging, settings.logging.log_level, logging.INFO))
    formatter = logging.Formatter(_FORMAT, datefmt=_DATE_FORMAT)

    # stdout carries emitted text (pretty, diagnostics); logs go to stderr
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(root.level)
    console_handler.setFormatter(formatter)

    file_handler = logging.FileHandler(settings.logging.log_file, encoding="utf-8")
    file_handler.setLevel(logging.WARNING)
    file_handler.setFormatter(formatter)

    root.addHandler(console_handler)
    root.addHandler(file_handler)
    root.propagate = False
    return root


def get_logger(name: str) -> logging.Logger:
    root = _root_logger()
    if name == _ROOT or name.startswith(f"{_ROOT}."):
        return logging.getLogger(name)
    return root.getChild(name)


def set_console_level(level: str) -> None:
    root = _root_logger()
    numeric = getattr(logging, level.upper(), logging.INFO)
    root.setLevel(numeric)
    for handler in root.handlers:
        if not isinstance(handler, logging.FileHandler):
            handler.setLevel(numeric)
